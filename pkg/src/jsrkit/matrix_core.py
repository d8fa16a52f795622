"""Dense single-matrix kernels: norms, spectral radius, Cholesky, estimators.

Matrices are plain ``complex128`` numpy arrays; :func:`as_matrix` validates
and freezes them (``writeable=False``) so they can be shared freely.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    ComputationError,
    DegenerateInputError,
    DomainError,
    InvariantViolation,
    NotPositiveDefiniteError,
    ProductOverflowError,
    ShapeError,
)

REL_TOL = 1e-9
ABS_TOL = 1e-12

POWER_PROBE_K = 200
POWER_PROBE_CAP = 1e6


def isclose(a, b, rel=REL_TOL, abs_=ABS_TOL):
    return abs(a - b) <= max(rel * max(abs(a), abs(b)), abs_)


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a validated, read-only square complex matrix."""
    arr = np.array(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ShapeError(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError("matrix has non-finite entries")
    arr.flags.writeable = False
    return arr


# ---------------------------------------------------------------- norms

class Norm(str, enum.Enum):
    """The three closed-form induced norms."""

    COLUMN_SUM = "colsum"
    SPECTRAL = "spectral"
    ROW_SUM = "rowsum"

    @property
    def label(self):
        return self.value


@dataclass(frozen=True, eq=False)
class EllipsoidalShape:
    """Hermitian positive definite ``P`` together with ``T`` s.t. ``P = T* T``."""

    P: np.ndarray
    T: np.ndarray

    @classmethod
    def from_matrix(cls, P) -> "EllipsoidalShape":
        P = np.array(P, dtype=np.complex128)
        P = 0.5 * (P + P.conj().T)
        T = cholesky(P)
        shape = cls(_frozen(P), _frozen(T))
        shape.check()
        return shape

    @classmethod
    def identity(cls, n):
        return cls.from_matrix(np.eye(n))

    @property
    def n(self):
        return self.P.shape[0]

    def check(self):
        scale = np.abs(self.P).sum(axis=1).max()
        err = np.abs(self.P - self.T.conj().T @ self.T).sum(axis=1).max()
        if err > 1e-10 * scale:
            raise InvariantViolation(f"Cholesky reconstruction error {err:.3e} too large")
        if np.any(np.diag(self.T).real <= 0):
            raise InvariantViolation("Cholesky factor has a non-positive diagonal")

    def vector_norm(self, x):
        return float(np.linalg.norm(self.T @ np.asarray(x, dtype=np.complex128)))

    def transform(self, A):
        """``T A T^{-1}``; its spectral norm is the ellipsoidal norm of ``A``."""
        # Y T = T A  <=>  T^T Y^T = (T A)^T, T^T lower triangular
        from scipy.linalg import solve_triangular

        TA = self.T @ A
        return solve_triangular(self.T.T, TA.T, lower=True).T


@dataclass(frozen=True, eq=False)
class Ellipsoidal:
    shape: EllipsoidalShape

    label = "ellipsoidal"


NormKind = Union[Norm, Ellipsoidal]

DEFAULT_NORMS = (Norm.ROW_SUM, Norm.SPECTRAL, Norm.COLUMN_SUM)


def parse_norm(name) -> Norm:
    if isinstance(name, (Norm, Ellipsoidal)):
        return name
    aliases = {
        "1": Norm.COLUMN_SUM, "colsum": Norm.COLUMN_SUM, "column": Norm.COLUMN_SUM,
        "2": Norm.SPECTRAL, "spectral": Norm.SPECTRAL,
        "inf": Norm.ROW_SUM, "rowsum": Norm.ROW_SUM, "row": Norm.ROW_SUM,
    }
    try:
        return aliases[str(name).strip().lower()]
    except KeyError:
        raise DomainError(f"unknown norm {name!r}; choose from colsum, spectral, rowsum") from None


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------- kernels

def eigvals(A) -> np.ndarray:
    try:
        w = np.linalg.eigvals(np.asarray(A, dtype=np.complex128))
    except np.linalg.LinAlgError as exc:
        raise ComputationError(f"eigenvalue solver failed: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise ComputationError("eigenvalue solver returned non-finite values")
    return w


def spectral_radius(A) -> float:
    """Largest eigenvalue modulus of ``A``."""
    return float(np.abs(eigvals(A)).max())


def sigma1(A) -> float:
    """Largest singular value of ``A``."""
    try:
        s = np.linalg.svd(np.asarray(A, dtype=np.complex128), compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ComputationError(f"singular value solver failed: {exc}") from exc
    return float(s[0])


def operator_norm(A, kind: NormKind = Norm.SPECTRAL) -> float:
    A = np.asarray(A)
    if kind is Norm.COLUMN_SUM:
        return float(np.abs(A).sum(axis=0).max())
    if kind is Norm.ROW_SUM:
        return float(np.abs(A).sum(axis=1).max())
    if kind is Norm.SPECTRAL:
        return sigma1(A)
    if isinstance(kind, Ellipsoidal):
        if kind.shape.n != A.shape[0]:
            raise ShapeError(f"shape of dimension {kind.shape.n} used on {A.shape[0]}x{A.shape[0]} matrix")
        Y = kind.shape.transform(A)
        if not np.all(np.isfinite(Y)):
            raise InvariantViolation("ellipsoidal shape has a singular Cholesky factor")
        return sigma1(Y)
    raise TypeError(f"not a norm kind: {kind!r}")


def ellipsoidal_norm_via_rho(A, P) -> float:
    """``sqrt(rho(A P^-1 A* P))``, the eigenvalue route to the ellipsoidal norm."""
    A = np.asarray(A, dtype=np.complex128)
    P = np.asarray(P, dtype=np.complex128)
    M = A @ np.linalg.solve(P, A.conj().T) @ P
    return float(np.sqrt(spectral_radius(M)))


def cholesky(P, tol=1e-12) -> np.ndarray:
    """Upper triangular ``T`` with positive real diagonal and ``P = T* T``.

    Raises :class:`NotPositiveDefiniteError` naming the first pivot that is
    not larger than ``tol * max|P_ii|``.
    """
    P = np.asarray(P, dtype=np.complex128)
    n = P.shape[0]
    if P.ndim != 2 or P.shape[1] != n:
        raise ShapeError(f"expected a square matrix, got shape {P.shape}")
    scale = max(float(np.abs(P).max()), 1e-300)
    if np.abs(P - P.conj().T).max() > REL_TOL * scale:
        raise DomainError("matrix is not Hermitian")
    floor = tol * max(float(np.abs(np.diag(P)).max()), 1e-300)
    T = np.zeros_like(P)
    for i in range(n):
        pivot = P[i, i].real - np.sum(np.abs(T[:i, i]) ** 2)
        if not pivot > floor:
            raise NotPositiveDefiniteError(i, float(pivot))
        d = np.sqrt(pivot)
        T[i, i] = d
        T[i, i + 1:] = (P[i, i + 1:] - T[:i, i].conj() @ T[:i, i + 1:]) / d
    return T


def matrix_power(A, k) -> np.ndarray:
    if k < 1:
        raise DomainError("k must be >= 1")
    with np.errstate(over="ignore", invalid="ignore"):
        Ak = np.linalg.matrix_power(np.asarray(A, dtype=np.complex128), int(k))
    if not np.all(np.isfinite(Ak)):
        raise ProductOverflowError(f"A^{k}")
    return Ak


def gelfand_estimate(A, k, kind: NormKind = Norm.SPECTRAL) -> float:
    """Normalized norm ``||A^k||^(1/k)``; tends to rho(A) as k grows."""
    return operator_norm(matrix_power(A, k), kind) ** (1.0 / k)


def trace_estimate(A, k) -> float:
    """``|tr(A^k)|^(1/k)``."""
    return float(abs(np.trace(matrix_power(A, k)))) ** (1.0 / k)


def is_row_stochastic(A, tol=1e-12) -> bool:
    A = np.asarray(A)
    if tol < 0:
        raise DomainError("tol must be nonnegative")
    if np.abs(A.imag).max(initial=0.0) > tol:
        return False
    re = A.real
    if re.min() < -tol:
        return False
    return bool(np.all(np.abs(re.sum(axis=1) - 1.0) <= tol))


def is_column_stochastic(A, tol=1e-12) -> bool:
    return is_row_stochastic(np.asarray(A).T, tol)


@dataclass(frozen=True)
class PowerProbe:
    """Outcome of :func:`power_bounded_probe`; ``exceeded_at`` is None when bounded."""

    exceeded_at: int | None
    max_norm: float

    @property
    def bounded(self):
        return self.exceeded_at is None


def power_bounded_probe(A, K=POWER_PROBE_K, cap=POWER_PROBE_CAP, kind: NormKind = Norm.ROW_SUM) -> PowerProbe:
    """Check whether the powers of ``A / rho(A)`` stay below ``cap`` up to ``K``."""
    rho = spectral_radius(A)
    if rho == 0.0:
        raise DegenerateInputError("spectral radius is zero (nilpotent matrix)")
    B = np.asarray(A, dtype=np.complex128) / rho
    P = np.eye(B.shape[0], dtype=np.complex128)
    worst = 0.0
    for k in range(1, K + 1):
        P = P @ B
        v = operator_norm(P, kind)
        worst = max(worst, v)
        if v > cap:
            return PowerProbe(k, worst)
    return PowerProbe(None, worst)
