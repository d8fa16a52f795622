"""Finite-length bounds on the joint spectral radius and what is built on them.

For each product length ``k`` the engine computes

* ``lower_k``: max over necklaces ``w`` of ``rho(P_w)^(1/k)`` (a lower bound),
* ``upper_k``: max over all words of ``||P_w||^(1/k)`` per norm (an upper bound),
* ``msr_k``: max over necklaces of ``|tr P_w|^(1/k)`` (diagnostic only).

Products are enumerated through a prefix tree (see :mod:`jsrkit.kernels`) on
the family divided by a power of two, so the analytic rescaling is exact.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import BudgetExceededError, DomainError
from .family import (
    DEFAULT_BUDGET,
    MatrixFamily,
    Word,
    check_word,
    count_necklaces,
    evaluate_word,
    necklaces,
    primitive_period,
)
from .matrix_core import (
    DEFAULT_NORMS,
    Ellipsoidal,
    EllipsoidalShape,
    Norm,
    eigvals,
    operator_norm,
    spectral_radius,
)

DEFAULT_K_MAX = 12
DECIDE_K_MAX = 64
STABILITY_MARGIN = 1e-10
TIE_REL = 1e-12
SMP_REL = 1e-9
CERT_REL = 1e-6
CHUNK = 1 << 15

_CODES = {Norm.COLUMN_SUM: kernels.COLSUM, Norm.SPECTRAL: kernels.SPECTRAL, Norm.ROW_SUM: kernels.ROWSUM}


def norm_label(kind, position=0):
    if isinstance(kind, Ellipsoidal):
        return "ellipsoidal" if position == 0 else f"ellipsoidal{position}"
    return kind.label


# ---------------------------------------------------------------- records

@dataclass(frozen=True)
class BoundsRecord:
    k: int
    lower: float
    witness_lower: Word
    upper: dict
    witness_upper: dict
    msr: float
    multiplications: int

    def as_dict(self):
        return {
            "k": self.k,
            "lower": self.lower,
            "witness_lower": list(self.witness_lower),
            "upper": dict(self.upper),
            "witness_upper": {k: list(v) for k, v in self.witness_upper.items()},
            "msr": self.msr,
            "multiplications": self.multiplications,
        }


@dataclass
class Bracket:
    """Best bounds found so far: ``best_lower <= rho(F) <= best_upper``."""

    best_lower: float = 0.0
    witness_lower: Word = ()
    best_upper: float = math.inf
    upper_k: int | None = None
    upper_norm: str | None = None
    k_max_reached: int = 0
    multiplications_used: int = 0
    partial: bool = False
    records: list = field(default_factory=list)

    def absorb(self, rec: BoundsRecord):
        if rec.lower > self.best_lower * (1 + TIE_REL) or not self.witness_lower:
            self.best_lower = rec.lower
            self.witness_lower = rec.witness_lower
        for label, value in rec.upper.items():
            if value < self.best_upper:
                self.best_upper = value
                self.upper_k = rec.k
                self.upper_norm = label
        self.k_max_reached = rec.k
        self.multiplications_used += rec.multiplications
        self.records.append(rec)

    @property
    def consistent(self):
        return self.best_lower <= self.best_upper + 1e-9 * max(1.0, self.best_upper)

    def as_dict(self, with_records=False):
        d = {
            "best_lower": self.best_lower,
            "witness_lower": list(self.witness_lower),
            "best_upper": self.best_upper if math.isfinite(self.best_upper) else None,
            "upper_k": self.upper_k,
            "upper_norm": self.upper_norm,
            "k_max_reached": self.k_max_reached,
            "multiplications_used": self.multiplications_used,
            "partial": self.partial,
        }
        if with_records:
            d["records"] = [r.as_dict() for r in self.records]
        return d


class _TieArgmax:
    """Streaming max with the least index among values within TIE_REL of the max."""

    def __init__(self):
        self.vmax = -math.inf
        self.idx = np.empty(0, dtype=np.int64)
        self.val = np.empty(0)

    def feed(self, values, offset):
        ok = ~np.isnan(values)
        if not ok.any():
            return
        pos = np.flatnonzero(ok)
        vals = values[pos]
        self.vmax = max(self.vmax, float(vals.max()))
        thr = self.vmax * (1 - TIE_REL) if self.vmax > 0 else self.vmax
        keep = vals >= thr
        pos, vals = pos[keep], vals[keep]
        prev = self.val.max() if len(self.val) else -math.inf
        # strict prefix maxima: anything else is dominated by an earlier index
        run = np.maximum.accumulate(np.concatenate([[prev], vals]))
        rec = vals > run[:-1]
        self.idx = np.concatenate([self.idx, pos[rec] + offset])
        self.val = np.concatenate([self.val, vals[rec]])
        live = self.val >= thr
        self.idx, self.val = self.idx[live], self.val[live]

    def result(self):
        if not len(self.idx):
            return self.vmax, None
        thr = self.vmax * (1 - TIE_REL) if self.vmax > 0 else self.vmax
        j = int(np.flatnonzero(self.val >= thr)[0])
        return self.vmax, int(self.idx[j])


def _power_of_two_scale(mats):
    s = max(operator_norm(a, Norm.ROW_SUM) for a in mats)
    if s == 0.0:
        return 1.0
    return 2.0 ** math.ceil(math.log2(s))


def _unscale(value, scale, k):
    if value <= 0.0:
        return 0.0
    return scale * value ** (1.0 / k)


def _norm_passes(F, norms):
    """Group norm kinds into (stack, codes, labels) passes over the words."""
    std = [(norm_label(kind), _CODES[kind]) for kind in norms if isinstance(kind, Norm)]
    passes = []
    if std:
        passes.append((F.stack, [c for _, c in std], [lab for lab, _ in std]))
    n_ell = 0
    for kind in norms:
        if isinstance(kind, Ellipsoidal):
            stack = np.stack([kind.shape.transform(a) for a in F])
            passes.append((stack, [kernels.SPECTRAL], [norm_label(kind, n_ell)]))
            n_ell += 1
    return passes


def _digits_to_word(idx, m, k):
    w = []
    for _ in range(k):
        idx, r = divmod(idx, m)
        w.append(r)
    return tuple(reversed(w))


def level_stats(F: MatrixFamily, k: int, norms=DEFAULT_NORMS, lower=True, use_numba=None) -> BoundsRecord:
    """Evaluate every length-``k`` product once and reduce to a :class:`BoundsRecord`."""
    if k < 1:
        raise DomainError("k must be >= 1")
    m = F.m
    passes = _norm_passes(F, norms)
    mults = 0
    uppers = {}
    lo = _TieArgmax()
    tr = _TieArgmax()
    neck = necklaces(m, k) if lower else []

    if passes:
        total = m**k
        mask_all = np.zeros(total, dtype=bool)
        if neck:
            mask_all[[_word_index(w, m) for w in neck]] = True
        for p, (stack, codes, labels) in enumerate(passes):
            scale = _power_of_two_scale(stack)
            if p == 0:
                scale0 = scale
            stack = stack / scale
            red = [_TieArgmax() for _ in labels]
            for start in range(0, total, CHUNK):
                stop = min(total, start + CHUNK)
                words = kernels.word_block(m, k, start, stop)
                mask = mask_all[start:stop] if p == 0 else np.zeros(stop - start, dtype=bool)
                nv, radii, traces, mu = kernels.word_stats(stack, words, codes, mask, use_numba)
                mults += mu
                for q, r in enumerate(red):
                    r.feed(nv[:, q], start)
                if p == 0 and mask.any():
                    lo.feed(radii, start)
                    tr.feed(traces, start)
            for lab, r in zip(labels, red):
                v, i = r.result()
                uppers[lab] = (_unscale(v, scale, k), _digits_to_word(i, m, k))
    elif neck:
        scale0 = _power_of_two_scale(F.stack)
        stack = F.stack / scale0
        warr = np.array(neck, dtype=np.int64)
        for start in range(0, len(warr), CHUNK):
            block = warr[start:start + CHUNK]
            _, radii, traces, mu = kernels.word_stats(stack, block, (), np.ones(len(block), bool), use_numba)
            mults += mu
            lo.feed(radii, start)
            tr.feed(traces, start)

    lower_value, witness = 0.0, ()
    msr = 0.0
    if neck:
        v, i = lo.result()
        lower_value = _unscale(v, scale0, k)
        witness = neck[i] if not passes else _digits_to_word(i, m, k)
        msr = _unscale(tr.result()[0], scale0, k)
    return BoundsRecord(
        k=k,
        lower=lower_value,
        witness_lower=witness,
        upper={lab: v for lab, (v, _) in uppers.items()},
        witness_upper={lab: w for lab, (_, w) in uppers.items()},
        msr=msr,
        multiplications=mults,
    )


def level_cost(F: MatrixFamily, k, norms=DEFAULT_NORMS):
    """Exact multiplication count of :func:`level_stats` over all words (an upper bound for necklace-only runs)."""
    passes = max(1, len(_norm_passes(F, norms)))
    return passes * sum(F.m**d for d in range(2, k + 1))


def _word_index(w, m):
    idx = 0
    for i in w:
        idx = idx * m + i
    return idx


# ---------------------------------------------------------------- single-k bounds

def lower_bound_k(F: MatrixFamily, k, budget=DEFAULT_BUDGET):
    """``(max over necklaces of rho(P_w)^(1/k), least maximizing necklace)``."""
    count = count_necklaces(F.m, k)
    if count > budget:
        raise BudgetExceededError(count, budget)
    rec = level_stats(F, k, norms=(), lower=True)
    return rec.lower, rec.witness_lower


def upper_bound_k(F: MatrixFamily, k, kind=Norm.SPECTRAL, budget=DEFAULT_BUDGET):
    """``(max over all words of ||P_w||^(1/k), least maximizing word)``."""
    if F.m**k > budget:
        raise BudgetExceededError(F.m**k, budget)
    rec = level_stats(F, k, norms=(kind,), lower=False)
    label = norm_label(kind)
    return rec.upper[label], rec.witness_upper[label]


def msr_estimate_k(F: MatrixFamily, k, budget=DEFAULT_BUDGET):
    """Trace-based diagnostic ``max |tr P_w|^(1/k)`` over necklaces."""
    count = count_necklaces(F.m, k)
    if count > budget:
        raise BudgetExceededError(count, budget)
    return level_stats(F, k, norms=(), lower=True).msr


def necklace_values(F: MatrixFamily, k):
    """All length-``k`` necklaces with their normalized spectral radii."""
    neck = necklaces(F.m, k)
    scale = _power_of_two_scale(F.stack)
    _, radii, _, _ = kernels.word_stats(F.stack / scale, np.array(neck, dtype=np.int64), (),
                                        np.ones(len(neck), bool))
    vals = np.array([_unscale(r, scale, k) for r in radii])
    return neck, vals


# ---------------------------------------------------------------- bracket

def bracket(F: MatrixFamily, k_max=DEFAULT_K_MAX, norms=DEFAULT_NORMS, budget=DEFAULT_BUDGET) -> Bracket:
    """Run lengths ``1..k_max`` and fold them into a :class:`Bracket`.

    Stops early (``partial=True``) when the next level's multiplication count would
    push the multiplication counter past ``budget``.
    """
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    br = Bracket()
    for k in range(1, k_max + 1):
        if br.multiplications_used + level_cost(F, k, norms) > budget:
            br.partial = True
            break
        br.absorb(level_stats(F, k, norms))
    return br


# ---------------------------------------------------------------- stability

class Status(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of :func:`decide_stability`.

    ``boundary`` marks an Undecided verdict reached because the bracket
    pinned ``rho(F) = 1`` (marginal case: trajectories bounded, not decaying).
    """

    status: Status
    bracket: Bracket
    k: int | None = None
    norm: str | None = None
    value: float | None = None
    witness: Word | None = None
    boundary: bool = False

    def as_dict(self):
        return {
            "status": self.status.value,
            "k": self.k,
            "norm": self.norm,
            "value": self.value,
            "witness": list(self.witness) if self.witness is not None else None,
            "boundary": self.boundary,
            "bracket": self.bracket.as_dict(with_records=True),
        }


def decide_stability(F: MatrixFamily, budget=DEFAULT_BUDGET, norms=DEFAULT_NORMS,
                     margin=STABILITY_MARGIN, k_max=DECIDE_K_MAX) -> StabilityVerdict:
    """Increase ``k`` until an upper bound drops below 1 or a lower bound reaches 1.

    A lower bound counts as reaching 1 at ``1 - margin`` so that eigenvalue
    roundoff cannot hide an exact s.m.p.; if at that moment the bracket also
    certifies ``rho <= 1 + margin`` the family sits on the boundary and the
    verdict is Undecided with ``boundary=True``.
    """
    if budget <= 0:
        raise DomainError("budget must be positive")
    br = Bracket()
    for k in range(1, k_max + 1):
        if br.multiplications_used + level_cost(F, k, norms) > budget:
            br.partial = True
            break
        rec = level_stats(F, k, norms)
        br.absorb(rec)
        for label, value in rec.upper.items():
            if value < 1 - margin:
                return StabilityVerdict(Status.STABLE, br, k=k, norm=label, value=value)
        if rec.lower >= 1 - margin:
            if br.best_upper <= 1 + margin:
                return StabilityVerdict(Status.UNDECIDED, br, k=k, value=rec.lower,
                                        witness=rec.witness_lower, boundary=True)
            return StabilityVerdict(Status.UNSTABLE, br, k=k, value=rec.lower, witness=rec.witness_lower)
    else:
        br.partial = True
    return StabilityVerdict(Status.UNDECIDED, br)


# ---------------------------------------------------------------- s.m.p.

@dataclass(frozen=True, eq=False)
class SmpCandidate:
    word: Word
    value: float
    minimal: bool
    certified: bool = False
    certificate: EllipsoidalShape | None = None

    def as_dict(self):
        d = {"word": list(self.word), "length": len(self.word), "value": self.value,
             "minimal": self.minimal, "certified": self.certified}
        if self.certificate is not None:
            d["certificate_P"] = _complex_rows(self.certificate.P)
        return d


def _complex_rows(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def smp_candidates(F: MatrixFamily, k_max=DEFAULT_K_MAX, best_lower=None):
    """Necklaces of length ``<= k_max`` within SMP_REL of the best lower bound.

    Sorted by (length, lexicographic). A candidate is minimal when it is not
    a power of a shorter word.
    """
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    per_k = [necklace_values(F, k) for k in range(1, k_max + 1)]
    best = max(float(v.max()) for _, v in per_k)
    if best_lower is not None:
        best = max(best, best_lower)
    out = []
    for k, (neck, vals) in enumerate(per_k, start=1):
        for w, v in zip(neck, vals):
            if v >= best * (1 - SMP_REL):
                value = spectral_radius(evaluate_word(F, w)) ** (1.0 / k)
                out.append(SmpCandidate(w, value, primitive_period(w) == k))
    return out


def leading_eigenvector(F: MatrixFamily, c: SmpCandidate) -> np.ndarray:
    """Unit eigenvector of ``P_c`` for an eigenvalue of maximal modulus.

    Ties among maximal-modulus eigenvalues go to the largest real part, then
    the largest imaginary part. Phase: first non-negligible entry real positive.
    """
    if not c.value > 0:
        raise DomainError("candidate value must be positive")
    P = evaluate_word(F, check_word(F, c.word))
    try:
        lam, V = np.linalg.eig(P)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        from .errors import ComputationError
        raise ComputationError(str(exc)) from exc
    mod = np.abs(lam)
    top = np.flatnonzero(mod >= mod.max() * (1 - 1e-12))
    j = max(top, key=lambda t: (round(lam[t].real, 12), round(lam[t].imag, 12)))
    x = V[:, j] / np.linalg.norm(V[:, j])
    big = np.flatnonzero(np.abs(x) > 1e-12 * np.abs(x).max())[0]
    return x * (abs(x[big]) / x[big])


# ---------------------------------------------------------------- extremal norms

def max_member_norm(F: MatrixFamily, shape: EllipsoidalShape) -> float:
    kind = Ellipsoidal(shape)
    return max(operator_norm(a, kind) for a in F)


def csr_refine(F: MatrixFamily, P0=None, iters=200, eta=0.1, max_rejections=20):
    """Greedy descent on ``max_i ||A_i||_P`` over ellipsoidal shapes.

    Each step pulls ``P`` toward ``A_j* P A_j / ||A_j||_P^2`` for the worst
    member ``j``; non-improving steps are rejected with the step halved, and
    the search stops after ``max_rejections`` consecutive rejections. The
    returned value is always a valid upper bound on ``rho(F)``.
    """
    shape = P0 if isinstance(P0, EllipsoidalShape) else EllipsoidalShape.from_matrix(
        np.eye(F.n) if P0 is None else P0)
    best = max_member_norm(F, shape)
    step = eta
    rejections = 0
    for _ in range(iters):
        if best == 0.0:
            break
        kind = Ellipsoidal(shape)
        norms = [operator_norm(a, kind) for a in F]
        j = int(np.argmax(norms))
        A = F[j]
        Q = A.conj().T @ shape.P @ A / norms[j] ** 2
        P = (1 - step) * shape.P + step * Q
        P = 0.5 * (P + P.conj().T)
        P *= F.n / np.trace(P).real
        try:
            cand = EllipsoidalShape.from_matrix(P)
            value = max_member_norm(F, cand)
        except Exception:
            value = math.inf
        if value < best:
            shape, best = cand, value
            step = eta
            rejections = 0
        else:
            step /= 2
            rejections += 1
            if rejections >= max_rejections:
                break
    return shape, best


def lmi_shape(F: MatrixFamily, gamma, solver=None):
    """Shape ``P`` with ``A_i* P A_i <= gamma^2 P`` for all members, or None.

    Solved as an SDP (cvxpy); the caller must re-check the result exactly.
    """
    import cvxpy as cp

    n = F.n
    real = F.is_real()
    if real:
        P = cp.Variable((n, n), symmetric=True)
        mats = [a.real for a in F]
    else:
        P = cp.Variable((n, n), hermitian=True)
        mats = list(F.members)
    t = cp.Variable()
    eye = np.eye(n)
    cons = [P >> eye, P << t * eye]
    for A in mats:
        M = gamma**2 * P - A.conj().T @ P @ A
        cons.append((0.5 * (M + M.T) if real else 0.5 * (M + M.H)) >> 0)
    prob = cp.Problem(cp.Minimize(t), cons)
    try:
        prob.solve(solver=solver or "CLARABEL")
    except Exception:
        try:
            prob.solve(solver="SCS", eps=1e-9)
        except Exception:
            return None
    if P.value is None or prob.status not in ("optimal", "optimal_inaccurate"):
        return None
    try:
        return EllipsoidalShape.from_matrix(np.asarray(P.value, dtype=np.complex128))
    except Exception:
        return None


def best_ellipsoidal_bound(F: MatrixFamily, lo=None, hi=None, rel_tol=1e-6, max_steps=40):
    """Bisection on ``gamma`` for the smallest feasible common quadratic norm bound.

    Returns ``(shape, value)`` where ``value = max_i ||A_i||_shape`` has been
    recomputed exactly (so it is a valid upper bound on rho(F)).
    """
    shape0 = EllipsoidalShape.identity(F.n)
    best_shape, best = shape0, max_member_norm(F, shape0)
    if best == 0.0:
        return best_shape, 0.0
    if hi is None:
        hi = best
    if lo is None:
        lo = 0.0
    for _ in range(max_steps):
        if hi - lo <= rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        shape = lmi_shape(F, mid) if mid > 0 else None
        if shape is None:
            lo = mid
            continue
        value = max_member_norm(F, shape)
        if value < best:
            best_shape, best = shape, value
        if value <= mid * (1 + 1e-6):
            hi = mid
        else:
            lo = mid
    return best_shape, best


@dataclass(frozen=True, eq=False)
class Certification:
    """Result of :func:`validate_smp`; ``ratio`` is ``max_i ||A_i||_P / value``."""

    certified: bool
    shape: EllipsoidalShape | None
    ratio: float
    method: str
    value: float
    report: dict = field(default_factory=dict)

    def as_dict(self):
        d = {"certified": self.certified, "ratio": self.ratio, "method": self.method,
             "value": self.value, **self.report}
        if self.shape is not None:
            d["P"] = _complex_rows(self.shape.P)
        return d


def validate_smp(F: MatrixFamily, c: SmpCandidate, iters=200, use_lmi=True) -> Certification:
    """Look for an ellipsoidal norm that is extremal at ``c.value``.

    Tries the identity, then :func:`csr_refine`, then the LMI search. A shape is
    accepted only after the exact check ``max_i ||A_i||_P <= value*(1+1e-6)``,
    which squeezes ``rho(F)`` between the candidate and the norm bound.
    """
    value = c.value
    if not value > 0:
        raise DomainError("candidate value must be positive")
    target = value * (1 + CERT_REL)
    tried = {}

    shape = EllipsoidalShape.identity(F.n)
    v = max_member_norm(F, shape)
    tried["identity"] = v / value
    best = ("identity", shape, v)
    if v <= target:
        return Certification(True, shape, v / value, "identity", value, {"tried": tried})

    shape, v = csr_refine(F, shape, iters=iters)
    tried["csr_refine"] = v / value
    if v < best[2]:
        best = ("csr_refine", shape, v)
    if v <= target:
        return Certification(True, shape, v / value, "csr_refine", value, {"tried": tried})

    if use_lmi:
        scaled = F.replace([a / value for a in F])
        shape = lmi_shape(scaled, 1 + 0.5 * CERT_REL)
        if shape is not None:
            v = max_member_norm(F, shape)
            tried["lmi"] = v / value
            if v < best[2]:
                best = ("lmi", shape, v)
            if v <= target:
                return Certification(True, shape, v / value, "lmi", value, {"tried": tried})
        shape, v = best_ellipsoidal_bound(scaled, lo=1.0, hi=best[2] / value)
        v *= value
        tried["lmi_bisection"] = v / value
        if v < best[2]:
            best = ("lmi_bisection", shape, v)
    name, shape, v = best
    return Certification(False, shape, v / value, name, value, {"tried": tried})


def certify_candidate(F: MatrixFamily, c: SmpCandidate, **kw):
    cert = validate_smp(F, c, **kw)
    return dataclasses.replace(c, certified=cert.certified,
                               certificate=cert.shape if cert.certified else None), cert

