"""Closed-form joint spectral radius for recognisable family structures.

Detectors run in a fixed order and the first hit determines ``rule``; every
other rule that also applies is listed in ``certificate["also_matches"]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .family import MatrixFamily, abs_family
from .matrix_core import (
    is_column_stochastic,
    is_row_stochastic,
    operator_norm,
    Norm,
    sigma1,
    spectral_radius,
)

DEFAULT_TOL = 1e-10
PATTERN_TOL = 1e-12


class Rule(str, enum.Enum):
    SINGLE_MATRIX = "SingleMatrix"
    ALL_STOCHASTIC = "AllStochastic"
    COMMUTING = "Commuting"
    ALL_NORMAL = "AllNormal"
    ALL_UPPER_TRIANGULAR = "AllUpperTriangular"
    CONJUGATE_PAIR = "ConjugatePair"
    SIGN_FLIP_PAIR_2X2 = "SignFlipPair2x2"
    SWAP_PAIR_2X2 = "SwapPair2x2"
    BLOCK_TRIANGULAR = "BlockTriangular"
    ABS_EXACT = "AbsExact"


@dataclass(frozen=True)
class ClosedFormResult:
    value: float
    rule: Rule
    certificate: dict = field(default_factory=dict)

    def as_dict(self):
        return {"value": self.value, "rule": self.rule.value, "certificate": self.certificate}


@dataclass(frozen=True)
class PairPattern:
    kind: str  # "SignFlip" or "Swap"
    a: float
    b: float
    c: float
    d: float


# ---------------------------------------------------------------- detectors

def detect_commuting(F: MatrixFamily, tol=DEFAULT_TOL) -> bool:
    norms = [operator_norm(a, Norm.ROW_SUM) for a in F]
    for i in range(F.m):
        for j in range(i + 1, F.m):
            C = F[i] @ F[j] - F[j] @ F[i]
            if operator_norm(C, Norm.ROW_SUM) > tol * (1 + norms[i] * norms[j]):
                return False
    return True


def detect_all_normal(F: MatrixFamily, tol=DEFAULT_TOL) -> bool:
    for a in F:
        C = a @ a.conj().T - a.conj().T @ a
        if operator_norm(C, Norm.ROW_SUM) > tol * (1 + operator_norm(a, Norm.ROW_SUM) ** 2):
            return False
    return True


def detect_triangular(F: MatrixFamily, tol=DEFAULT_TOL):
    """"upper", "lower" or None, for a common triangular shape in the given basis."""
    scale = max(float(np.abs(a).max()) for a in F)
    floor = tol * max(scale, 1e-300)
    if all(np.abs(np.tril(a, -1)).max(initial=0.0) <= floor for a in F):
        return "upper"
    if all(np.abs(np.triu(a, 1)).max(initial=0.0) <= floor for a in F):
        return "lower"
    return None


def detect_conjugate_pair(F: MatrixFamily, tol=DEFAULT_TOL) -> bool:
    if F.m != 2:
        return False
    A, B = F
    return float(np.abs(B - A.conj().T).max()) <= tol * (1 + float(np.abs(A).max()))


def detect_pattern_pairs(F: MatrixFamily, tol=PATTERN_TOL):
    """Recognise the sign-flip and swap 2x2 pair patterns (real entries only).

    Both maps are involutions, so member order does not matter.
    """
    if F.m != 2 or F.n != 2 or not F.is_real():
        return None
    A, B = F[0].real, F[1].real
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    if np.abs(B - np.array([[a, -b], [-c, d]])).max() <= tol:
        return PairPattern("SignFlip", a, b, c, d)
    if np.abs(B - np.array([[d, c], [b, a]])).max() <= tol:
        return PairPattern("Swap", a, b, c, d)
    return None


def pattern_value(pat: PairPattern):
    A = np.array([[pat.a, pat.b], [pat.c, pat.d]])
    if pat.kind == "SignFlip":
        B = np.array([[pat.a, -pat.b], [-pat.c, pat.d]])
        single = pat.b * pat.c >= 0
    else:
        B = np.array([[pat.d, pat.c], [pat.b, pat.a]])
        single = abs(pat.a - pat.d) >= abs(pat.b - pat.c)
    if single:
        return spectral_radius(A), (0,)
    return float(np.sqrt(spectral_radius(A @ B))), (0, 1)


def abs_exactness_check(F: MatrixFamily, k_max=8, tol=1e-9, budget=10**6):
    """Exact value when some necklace of ``F`` reaches the upper bound of ``|F|``.

    ``rho(P)^(1/k) <= rho(F) <= rho(|F|) <= upper(|F|)``, so a necklace of
    ``F`` reaching ``upper(|F|)`` pins ``rho(F)``. Returns ``(value, word)``
    or None. Levels whose enumeration exceeds ``budget`` are skipped.
    """
    from .bounds import bracket, lower_bound_k

    absF = abs_family(F)
    upper = bracket(absF, k_max=k_max, budget=budget).best_upper
    closed = try_closed_form(absF, include_abs=False, include_blocks=False)
    if closed is not None:
        upper = min(upper, closed.value)
    for k in range(1, k_max + 1):
        if F.m**k > budget:
            break
        value, word = lower_bound_k(F, k)
        if value >= upper * (1 - tol):
            return value, word
    return None


# ---------------------------------------------------------------- driver

def _block_closed_form(F, tol, depth):
    from .structure import apply_block_reduction, given_basis_certificate, invariant_subspace_search

    cert = given_basis_certificate(F) or invariant_subspace_search(F)
    if cert is None:
        return None
    parts = apply_block_reduction(F, cert)
    sub = [try_closed_form(p, tol, _depth=depth + 1) for p in parts]
    if any(s is None for s in sub):
        return None
    value = max(s.value for s in sub)
    return value, {
        "n1": cert.n1,
        "residual": cert.residual,
        "blocks": [s.as_dict() for s in sub],
    }


def _cheap_matches(F, tol):
    """Yield ``(rule, value, certificate)`` for every given-basis rule that applies, in order."""
    if F.m == 1:
        yield Rule.SINGLE_MATRIX, spectral_radius(F[0]), {"word": [0]}
    rows = all(is_row_stochastic(a, tol) for a in F)
    if rows or all(is_column_stochastic(a, tol) for a in F):
        yield Rule.ALL_STOCHASTIC, 1.0, {"orientation": "row" if rows else "column"}
    radii = [spectral_radius(a) for a in F]
    imax = int(np.argmax(radii))
    if detect_commuting(F, tol):
        yield Rule.COMMUTING, radii[imax], {"word": [imax]}
    if detect_all_normal(F, tol):
        yield Rule.ALL_NORMAL, radii[imax], {"word": [imax]}
    tri = detect_triangular(F, tol)
    if tri:
        yield Rule.ALL_UPPER_TRIANGULAR, radii[imax], {"word": [imax], "shape": tri}
    if detect_conjugate_pair(F, tol):
        yield Rule.CONJUGATE_PAIR, sigma1(F[0]), {"word": [0, 1]}
    pat = detect_pattern_pairs(F)
    if pat is not None:
        value, word = pattern_value(pat)
        rule = Rule.SIGN_FLIP_PAIR_2X2 if pat.kind == "SignFlip" else Rule.SWAP_PAIR_2X2
        yield rule, value, {"a": float(pat.a), "b": float(pat.b), "c": float(pat.c), "d": float(pat.d),
                            "word": list(word)}


def try_closed_form(F: MatrixFamily, tol=DEFAULT_TOL, include_abs=True, include_blocks=True,
                    _depth=0) -> ClosedFormResult | None:
    """Exact ``rho(F)`` from the first applicable rule, or None.

    Order: SingleMatrix, AllStochastic, Commuting, AllNormal,
    AllUpperTriangular, ConjugatePair, SignFlipPair2x2, SwapPair2x2,
    BlockTriangular, AbsExact. The two search-based rules only run when no
    given-basis rule fired.
    """
    hits = list(_cheap_matches(F, tol))
    if hits:
        rule, value, cert = hits[0]
        also = [r.value for r, _, _ in hits[1:]]
    else:
        also = []
        found = None
        if include_blocks and F.n > 1 and _depth < F.n:
            res = _block_closed_form(F, tol, _depth)
            if res is not None:
                found = (Rule.BLOCK_TRIANGULAR, res[0], res[1])
        if found is None and include_abs:
            res = abs_exactness_check(F)
            if res is not None:
                found = (Rule.ABS_EXACT, res[0], {"word": list(res[1])})
        if found is None:
            return None
        rule, value, cert = found
    cert = dict(cert)
    cert["also_matches"] = also
    return ClosedFormResult(float(value), rule, cert)
