"""Family and system files, run reports and the bounds CSV table.

Matrices travel as JSON rows of ``[re, im]`` pairs; Python's float repr
makes the round trip exact.
"""

from __future__ import annotations

import csv
import hashlib
import json
import json.scanner
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._accel import backend_name
from .errors import FamilyFileError
from .family import MatrixFamily
from .inclusion import PerturbedSystem


# ---------------------------------------------------------------- matrices

def matrix_to_rows(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=np.complex128)]


class _Located(list):
    """JSON array that remembers where it starts in the source text."""

    pos = None


class _LocatedDict(dict):
    pos = None


def _located_decoder():
    dec = json.JSONDecoder()
    parse_array, parse_object = dec.parse_array, dec.parse_object

    def array(state, scan_once):
        value, end = parse_array(state, scan_once)
        out = _Located(value)
        out.pos = state[1] - 1
        return out, end

    def obj(state, *rest):
        value, end = parse_object(state, *rest)
        out = _LocatedDict(value)
        out.pos = state[1] - 1
        return out, end

    dec.parse_array = array
    dec.parse_object = obj
    dec.scan_once = json.scanner.py_make_scanner(dec)
    return dec


class _Source:
    def __init__(self, text):
        self.text = text

    def fail(self, message, node=None):
        pos = getattr(node, "pos", None)
        if pos is None:
            raise FamilyFileError(message)
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        raise FamilyFileError(message, line, col)


def rows_to_matrix(rows, n, where, src=None, parent=None):
    src = src or _Source("")
    if not isinstance(rows, list) or len(rows) != n:
        src.fail(f"{where}: expected {n} rows", rows if isinstance(rows, list) else parent)
    out = np.empty((n, n), dtype=np.complex128)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            src.fail(f"{where}[{i}]: expected {n} entries", row if isinstance(row, list) else rows)
        for j, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in z)):
                src.fail(f"{where}[{i}][{j}]: expected a [re, im] pair of numbers", z if isinstance(z, list) else row)
            if not all(math.isfinite(t) for t in z):
                src.fail(f"{where}[{i}][{j}]: entries must be finite", z)
            out[i, j] = complex(z[0], z[1])
    return out


def _load_json(text):
    try:
        doc = _located_decoder().decode(text)
    except json.JSONDecodeError as exc:
        raise FamilyFileError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    src = _Source(text)
    if not isinstance(doc, dict):
        src.fail("top level must be a JSON object", doc if isinstance(doc, list) else None)
    return doc, src


def _dimension(doc, src):
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        src.fail("'n' must be a positive integer", doc)
    return n


# ---------------------------------------------------------------- family files

def parse_family(text) -> MatrixFamily:
    doc, src = _load_json(text)
    n = _dimension(doc, src)
    mats = doc.get("matrices")
    if not isinstance(mats, list) or not mats:
        src.fail("'matrices' must be a nonempty array", mats if isinstance(mats, list) else doc)
    members, labels = [], []
    for i, entry in enumerate(mats):
        if not isinstance(entry, dict):
            src.fail(f"matrices[{i}] must be an object", entry if isinstance(entry, list) else mats)
        members.append(rows_to_matrix(entry.get("rows"), n, f"matrices[{i}].rows", src, entry))
        labels.append(str(entry.get("label", f"A{i}")))
    return MatrixFamily(tuple(members), name=str(doc.get("name", "family")), labels=tuple(labels))


def emit_family(F: MatrixFamily) -> str:
    doc = {
        "name": F.name,
        "n": F.n,
        "matrices": [{"label": lab, "rows": matrix_to_rows(a)} for lab, a in zip(F.labels, F)],
    }
    return json.dumps(doc, indent=2)


def read_family(path) -> MatrixFamily:
    with open(path, encoding="utf-8") as fh:
        return parse_family(fh.read())


# ---------------------------------------------------------------- system files

def parse_system(text) -> PerturbedSystem:
    """``{"name", "n", "A0": rows, "directions": [rows, ...], "delta_norm": "inf"|"2"}``."""
    doc, src = _load_json(text)
    n = _dimension(doc, src)
    A0 = rows_to_matrix(doc.get("A0"), n, "A0", src, doc)
    dirs = doc.get("directions", [])
    if not isinstance(dirs, list):
        src.fail("'directions' must be an array", doc)
    directions = tuple(rows_to_matrix(d, n, f"directions[{i}]", src, dirs) for i, d in enumerate(dirs))
    delta_norm = doc.get("delta_norm", "inf")
    if delta_norm not in ("inf", "2"):
        src.fail("'delta_norm' must be \"inf\" or \"2\"", doc)
    return PerturbedSystem(A0, directions, delta_norm, 0.0, str(doc.get("name", "system")))


def emit_system(sys: PerturbedSystem) -> str:
    doc = {
        "name": sys.name,
        "n": sys.A0.shape[0],
        "A0": matrix_to_rows(sys.A0),
        "directions": [matrix_to_rows(d) for d in sys.directions],
        "delta_norm": sys.delta_norm,
    }
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------- reports

def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunReport:
    """JSON report: everything except ``timing`` is a function of (input, options, seed)."""

    command: str
    input_sha256: str | None
    options: dict
    seed: int = 0
    result: dict = field(default_factory=dict)
    started: float = field(default_factory=time.perf_counter)

    def as_dict(self):
        return {
            "tool": "jsrkit",
            "version": __version__,
            "command": self.command,
            "input_sha256": self.input_sha256,
            "options": self.options,
            "seed": self.seed,
            "backend": backend_name(),
            "result": _jsonable(self.result),
            "timing": {"wall_time_s": time.perf_counter() - self.started},
        }

    def dumps(self):
        return json.dumps(self.as_dict(), indent=2, allow_nan=False)


def _jsonable(x):
    """Replace non-finite floats with None and numpy scalars with Python ones."""
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


# ---------------------------------------------------------------- CSV

def word_text(w):
    return "-".join(str(i) for i in w) if w is not None else ""


def bounds_csv(records, labels, fh):
    """One row per length: ``k, lower_k, witness_lower, upper_<norm>..., witness_<norm>..., msr_k, multiplications``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["k", "lower_k", "witness_lower"]
               + [f"upper_{lab}" for lab in labels]
               + [f"witness_{lab}" for lab in labels]
               + ["msr_k", "multiplications"])
    for r in records:
        w.writerow([r.k, repr(r.lower), word_text(r.witness_lower)]
                   + [repr(r.upper[lab]) for lab in labels]
                   + [word_text(r.witness_upper[lab]) for lab in labels]
                   + [repr(r.msr), r.multiplications])
