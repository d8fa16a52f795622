"""Named reference families."""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .family import MatrixFamily


def blondel(alpha=1.0) -> MatrixFamily:
    """``{[[1,1],[0,1]], alpha [[1,0],[1,1]]}`` for ``0 <= alpha <= 1``."""
    if not 0 <= alpha <= 1:
        raise DomainError(f"blondel family needs 0 <= alpha <= 1, got {alpha}")
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    B = alpha * np.array([[1.0, 0.0], [1.0, 1.0]])
    return MatrixFamily((A, B), name=f"blondel(alpha={alpha:g})", labels=("A", "B"))


def berger_wang(k=3, alpha=1.1) -> MatrixFamily:
    """Nilpotent/rotation pair whose minimal s.m.p. has length ``k + 1``.

    ``{alpha^k [[0,0],[1,0]], alpha^-1 R}`` with ``R`` the clockwise rotation
    by ``pi / 2k``; requires ``1 < alpha < 1 / cos(pi / 2k)``.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    t = math.pi / (2 * k)
    if not 1 < alpha < 1 / math.cos(t):
        raise DomainError(f"berger-wang family needs 1 < alpha < {1 / math.cos(t):.12g}, got {alpha}")
    A = alpha**k * np.array([[0.0, 0.0], [1.0, 0.0]])
    B = np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]]) / alpha
    return MatrixFamily((A, B), name=f"berger-wang(k={k},alpha={alpha:g})", labels=("N", "R"))


def stochastic() -> MatrixFamily:
    """Two row-stochastic matrices with dyadic entries, so products are exact."""
    A = np.array([[0.5, 0.5], [0.25, 0.75]])
    B = np.array([[1.0, 0.0], [0.5, 0.5]])
    return MatrixFamily((A, B), name="stochastic", labels=("A", "B"))


def sign_flip(a=2.0, b=1.0, c=-1.0, d=0.0) -> MatrixFamily:
    """Sign-flip pair ``{[[a,b],[c,d]], [[a,-b],[-c,d]]}``."""
    A = np.array([[a, b], [c, d]], dtype=float)
    B = np.array([[a, -b], [-c, d]], dtype=float)
    return MatrixFamily((A, B), name=f"sign-flip({a:g},{b:g},{c:g},{d:g})", labels=("A", "B"))


def swap_pair(a=0.0, b=2.0, c=1.0, d=0.0) -> MatrixFamily:
    """Swap pair ``{[[a,b],[c,d]], [[d,c],[b,a]]}``."""
    A = np.array([[a, b], [c, d]], dtype=float)
    B = np.array([[d, c], [b, a]], dtype=float)
    return MatrixFamily((A, B), name=f"swap-pair({a:g},{b:g},{c:g},{d:g})", labels=("A", "B"))


def conjugate_pair(A=None) -> MatrixFamily:
    """``{A, A*}``; defaults to ``A = [[0,2],[0,0]]``."""
    A = np.array([[0.0, 2.0], [0.0, 0.0]]) if A is None else np.asarray(A, dtype=np.complex128)
    return MatrixFamily((A, np.conj(A).T), name="conjugate-pair", labels=("A", "A*"))


def jordan(n=2, lam=1.0) -> MatrixFamily:
    """Single Jordan block ``J_n(lam)`` (defective when ``|lam| = rho``)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    J = lam * np.eye(n) + np.eye(n, k=1)
    return MatrixFamily((J,), name=f"jordan({n},{lam:g})", labels=("J",))


GALLERY = {
    "blondel": blondel,
    "berger-wang": berger_wang,
    "stochastic": stochastic,
    "sign-flip": sign_flip,
    "swap-pair": swap_pair,
    "conjugate-pair": conjugate_pair,
    "jordan": jordan,
}


# short names accepted by the command line
ALIASES = {"thm4": "sign-flip", "thm5": "swap-pair"}


def get(name, **params) -> MatrixFamily:
    try:
        build = GALLERY[ALIASES.get(name, name)]
    except KeyError:
        raise DomainError(f"unknown gallery family {name!r}; known: {', '.join(GALLERY)}") from None
    return build(**params)
