"""Reducibility certificates, defectivity probes and extremal-norm checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, PreconditionError, StaleCertificateError
from .family import MatrixFamily, all_words
from .matrix_core import Ellipsoidal, EllipsoidalShape, operator_norm

RANK_TOL = 1e-10
RESIDUAL_TOL = 1e-8
PLATEAU_FACTOR = 2.0
GROWTH_SLOPE_MIN = 0.8


@dataclass(frozen=True, eq=False)
class ReducibilityCertificate:
    """Orthonormal basis of a common invariant subspace plus a unitary completion ``M``."""

    basis: np.ndarray
    M: np.ndarray
    residual: float

    @property
    def n1(self):
        return self.basis.shape[1]

    def as_dict(self):
        rows = lambda X: [[[float(z.real), float(z.imag)] for z in r] for r in X]  # noqa: E731
        return {"n1": self.n1, "residual": self.residual, "basis": rows(self.basis), "M": rows(self.M)}


def invariance_residual(F: MatrixFamily, Q) -> float:
    Pperp = np.eye(F.n) - Q @ Q.conj().T
    return max(float(np.linalg.norm(Pperp @ a @ Q, 2)) for a in F)


def _scale(F):
    return max(max(float(np.linalg.norm(a, 2)) for a in F), 1e-300)


def certificate_from_basis(F: MatrixFamily, Q) -> ReducibilityCertificate:
    """Build (and verify) a certificate for the span of the columns of ``Q``."""
    Q = np.asarray(Q, dtype=np.complex128)
    if Q.ndim == 1:
        Q = Q[:, None]
    Q, _ = np.linalg.qr(Q)
    n1 = Q.shape[1]
    if not 1 <= n1 < F.n:
        raise PreconditionError(f"subspace dimension {n1} is not proper for n={F.n}")
    # unitary completion: trailing left singular vectors of Q
    U, _, _ = np.linalg.svd(Q, full_matrices=True)
    M = np.hstack([Q, U[:, n1:]])
    res = invariance_residual(F, Q)
    return ReducibilityCertificate(Q, M, res)


def _orbit_closure(F: MatrixFamily, x, tol):
    Q = (x / np.linalg.norm(x))[:, None]
    while Q.shape[1] < F.n:
        W = np.hstack([a @ Q for a in F])
        W = W - Q @ (Q.conj().T @ W)
        U, s, _ = np.linalg.svd(W, full_matrices=False)
        new = U[:, s > tol]
        if new.shape[1] == 0:
            break
        Q, _ = np.linalg.qr(np.hstack([Q, new]))
        Q = Q[:, : min(F.n, Q.shape[1])]
    return Q


def _seeds(F: MatrixFamily, seed_count, k_seed, rng):
    mats = []
    for k in range(1, k_seed + 1):
        if F.m**k <= seed_count:
            words = all_words(F.m, k)
        else:
            words = [tuple(rng.integers(0, F.m, size=k)) for _ in range(seed_count)]
        for w in words:
            P = F[w[0]]
            for i in w[1:]:
                P = P @ F[i]
            mats.append(P)
    for _ in range(max(2, seed_count // 4)):
        c = rng.normal(size=F.m) + 1j * rng.normal(size=F.m)
        mats.append(np.tensordot(c, F.stack, axes=1))
    for P in mats:
        _, V = np.linalg.eig(P)
        for j in range(V.shape[1]):
            yield V[:, j]


def invariant_subspace_search(F: MatrixFamily, seed_count=16, k_seed=3, seed=0, tol=RANK_TOL):
    """Search for a proper common invariant subspace (over the complex field).

    Seeds are eigenvectors of products up to length ``k_seed`` and of random
    linear combinations of the members; each seed's orbit closure under the
    family is grown to a fixpoint. The same is done for the conjugate family,
    whose invariant subspaces are orthogonal complements of invariant
    subspaces of ``F``. Returns the smallest certificate found, or None
    (which is evidence, not proof, of irreducibility).
    """
    if seed_count < 1 or k_seed < 1:
        raise DomainError("seed_count and k_seed must be positive")
    if F.n == 1:
        return None
    rng = np.random.default_rng(seed)
    scale = _scale(F)
    best = None
    conj = F.replace([a.conj().T for a in F])
    for fam, complement in ((F, False), (conj, True)):
        for x in _seeds(fam, seed_count, k_seed, rng):
            if np.linalg.norm(x) == 0:
                continue
            Q = _orbit_closure(fam, x, tol * scale)
            if Q.shape[1] >= F.n:
                continue
            if complement:
                U, _, _ = np.linalg.svd(Q, full_matrices=True)
                Q = U[:, Q.shape[1]:]
            cert = certificate_from_basis(F, Q)
            if cert.residual <= RESIDUAL_TOL * scale and (best is None or cert.n1 < best.n1):
                best = cert
                if best.n1 == 1:
                    return best
    return best


def given_basis_certificate(F: MatrixFamily, tol=0.0):
    """Certificate for the leading coordinate subspace when every member is block upper triangular."""
    for n1 in range(1, F.n):
        if all(np.abs(a[n1:, :n1]).max() <= tol for a in F):
            return certificate_from_basis(F, np.eye(F.n)[:, :n1])
    return None


def apply_block_reduction(F: MatrixFamily, cert: ReducibilityCertificate):
    """Diagonal-block families of ``M^-1 A_i M``; refuses stale certificates."""
    n1 = cert.n1
    if not 1 <= n1 < F.n or cert.M.shape != (F.n, F.n):
        raise PreconditionError(f"certificate dimension {n1} is not proper for n={F.n}")
    scale = _scale(F)
    res = invariance_residual(F, cert.basis)
    if res > RESIDUAL_TOL * scale:
        raise StaleCertificateError(f"invariance residual {res:.3e} exceeds {RESIDUAL_TOL:g}*{scale:.3g}")
    Minv = np.linalg.inv(cert.M)
    blocks = [Minv @ a @ cert.M for a in F]
    upper = F.replace([b[:n1, :n1] for b in blocks], name=f"{F.name}[11]")
    lower = F.replace([b[n1:, n1:] for b in blocks], name=f"{F.name}[22]")
    return upper, lower


# ---------------------------------------------------------------- defectivity

@dataclass(frozen=True)
class DefectivityReport:
    """``samples`` rows are ``(k, M_k, word)`` with ``M_k = ||P_word||_inf``."""

    samples: list
    classification: str
    slope: float | None
    thresholds: dict = field(default_factory=lambda: {
        "plateau_factor": PLATEAU_FACTOR, "growth_slope_min": GROWTH_SLOPE_MIN})

    def as_dict(self):
        return {
            "classification": self.classification,
            "slope": self.slope,
            "thresholds": dict(self.thresholds),
            "samples": [{"k": k, "M_k": v, "word": list(w)} for k, v, w in self.samples],
        }


def defectivity_probe(F: MatrixFamily, rho_est, K=64, samples_per_k=32, seed=0) -> DefectivityReport:
    """Track the largest sampled product norm of ``F / rho_est`` for ``k <= K``.

    Words are random (seeded) plus one greedy word that extends the previous
    greedy product by the member maximizing its norm. Classification:
    GrowthEvidence when the log-log slope over the second half is at least
    GROWTH_SLOPE_MIN; BoundedEvidence when the maximum over the last quarter
    is within PLATEAU_FACTOR of the median; Inconclusive otherwise.
    """
    if not rho_est > 0:
        raise DomainError(f"rho_est must be positive, got {rho_est}")
    rng = np.random.default_rng(seed)
    stack = F.stack / rho_est
    samples = []
    greedy_word = ()
    greedy = np.eye(F.n, dtype=np.complex128)
    for k in range(1, K + 1):
        cand = [greedy @ stack[i] for i in range(F.m)]
        j = int(np.argmax([np.abs(c).sum(axis=1).max() for c in cand]))
        greedy, greedy_word = cand[j], greedy_word + (j,)
        if F.m**k <= samples_per_k:
            words = np.array(all_words(F.m, k), dtype=np.int64)
        else:
            words = rng.integers(0, F.m, size=(samples_per_k, k))
        words = np.vstack([words, np.array(greedy_word)[None, :]])
        words = np.unique(words, axis=0)
        prods, _ = kernels.products(stack, words)
        norms = np.abs(prods).sum(axis=2).max(axis=1)
        best = int(np.argmax(norms))
        samples.append((k, float(norms[best]), tuple(int(i) for i in words[best])))

    ks = np.array([s[0] for s in samples], dtype=float)
    Ms = np.array([s[1] for s in samples])
    half = ks >= max(1, K // 2)
    slope = None
    cls = "Inconclusive"
    if np.all(Ms[half] > 0) and half.sum() >= 2:
        slope = float(np.polyfit(np.log(ks[half]), np.log(Ms[half]), 1)[0])
    tail = Ms[ks > K - max(1, K // 4)]
    if slope is not None and slope >= GROWTH_SLOPE_MIN:
        cls = "GrowthEvidence"
    elif tail.max() <= PLATEAU_FACTOR * np.median(Ms):
        cls = "BoundedEvidence"
    return DefectivityReport(samples, cls, slope)


def extremal_norm_check(F: MatrixFamily, shape: EllipsoidalShape, value, tol=1e-9) -> bool:
    """True iff every member has ellipsoidal norm at most ``value * (1 + tol)``."""
    kind = Ellipsoidal(shape)
    return max(operator_norm(a, kind) for a in F) <= value * (1 + tol)

