"""Discrete linear inclusions: perturbed families, trajectories and robustness search.

Trajectories follow ``x(k+1) = Y_{i_k} x(k)``, so after the word
``(i_1, ..., i_K)`` the state is ``A_{i_K} ... A_{i_1} x(0)``, which is
``evaluate_word`` of the reversed word applied to ``x(0)``.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import DEFAULT_BUDGET, Status, StabilityVerdict, decide_stability
from .errors import BudgetExceededError, DomainError, PreconditionError, ShapeError
from .family import MatrixFamily
from .matrix_core import as_matrix, spectral_radius

MAX_DIRECTIONS = 20
GRID_BUDGET = 10**6
OVERFLOW = 1e300
VECTOR_NORMS = {"inf": np.inf, "2": 2, "1": 1}


def vector_norm(x, kind="inf"):
    try:
        return float(np.linalg.norm(x, VECTOR_NORMS[str(kind)]))
    except KeyError:
        raise DomainError(f"unknown vector norm {kind!r}; use one of {sorted(VECTOR_NORMS)}") from None


# ---------------------------------------------------------------- perturbed systems

@dataclass(frozen=True, eq=False)
class PerturbedSystem:
    """``x(k+1) = (A0 + sum_i delta_i(k) A_i) x(k)`` with ``||delta(k)|| <= alpha``."""

    A0: np.ndarray
    directions: tuple = ()
    delta_norm: str = "inf"
    alpha: float = 0.0
    name: str = "system"

    def __post_init__(self):
        A0 = as_matrix(self.A0)
        dirs = tuple(as_matrix(d) for d in self.directions)
        for i, d in enumerate(dirs):
            if d.shape != A0.shape:
                raise ShapeError(f"direction {i} has shape {d.shape}, A0 has {A0.shape}")
        if self.delta_norm not in ("inf", "2"):
            raise DomainError(f"delta_norm must be 'inf' or '2', got {self.delta_norm!r}")
        if not self.alpha >= 0:
            raise DomainError(f"alpha must be nonnegative, got {self.alpha}")
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "directions", dirs)

    @property
    def p(self):
        return len(self.directions)

    def with_alpha(self, alpha):
        return PerturbedSystem(self.A0, self.directions, self.delta_norm, alpha, self.name)


@dataclass(frozen=True)
class Grid:
    """Sample each perturbation coordinate at ``levels`` points of ``[-1, 1]``."""

    levels: int = 3


VERTICES = "vertices"


def is_sampled_envelope(sys: PerturbedSystem) -> bool:
    """True when the emitted family only samples the uncertainty ball (2-norm ball)."""
    return sys.delta_norm == "2"


def _delta_points(p, delta_norm, sampling):
    if sampling == VERTICES:
        if delta_norm != "inf":
            raise DomainError("vertex sampling is exact only for the inf-norm ball; use Grid for the 2-norm ball")
        if p > MAX_DIRECTIONS:
            raise BudgetExceededError(2**p, 2**MAX_DIRECTIONS)
        return [np.array(s, dtype=float) for s in itertools.product((-1.0, 1.0), repeat=p)]
    if not isinstance(sampling, Grid) or sampling.levels < 2:
        raise DomainError(f"sampling must be VERTICES or Grid(levels >= 2), got {sampling!r}")
    if sampling.levels**p > GRID_BUDGET:
        raise BudgetExceededError(sampling.levels**p, GRID_BUDGET)
    axis = np.linspace(-1.0, 1.0, sampling.levels)
    pts = [np.array(s) for s in itertools.product(axis, repeat=p)]
    if delta_norm == "2":
        # the ball's image is the hull of the sphere's image: project onto the sphere
        pts = [s / np.linalg.norm(s) for s in pts if np.linalg.norm(s) > 0]
    return pts


def build_perturbed_family(sys: PerturbedSystem, sampling=VERTICES) -> MatrixFamily:
    """Members ``A0 + alpha * sum_i delta_i A_i`` over the sampled ``delta``.

    Vertices are emitted in ``itertools.product((-1, 1), ...)`` order;
    exact duplicates are dropped (first occurrence kept).
    """
    if sys.p == 0:
        return MatrixFamily((sys.A0,), name=f"{sys.name}@{sys.alpha:g}")
    members = []
    seen = set()
    for delta in _delta_points(sys.p, sys.delta_norm, sampling):
        M = sys.A0 + sys.alpha * sum(d * A for d, A in zip(delta, sys.directions))
        key = M.tobytes()
        if key not in seen:
            seen.add(key)
            members.append(M)
    return MatrixFamily(tuple(members), name=f"{sys.name}@{sys.alpha:g}")


# ---------------------------------------------------------------- trajectories

@dataclass(frozen=True)
class Trajectory:
    """States ``x(0..K)``, the applied indices ``i_1..i_K`` and ``||x(k)||`` per step."""

    states: np.ndarray
    word: tuple
    growth_log: np.ndarray
    truncated: bool = False
    norm: str = "inf"

    @property
    def K(self):
        return len(self.word)

    def growth_rate(self):
        """``(||x(K)|| / ||x(0)||)^(1/K)``; ``inf`` for truncated runs."""
        if self.truncated:
            return math.inf
        if self.K == 0:
            return 1.0
        ratio = self.growth_log[-1] / self.growth_log[0]
        return float(ratio ** (1.0 / self.K))

    def to_csv(self, fh):
        """Write ``k, re_0, im_0, ..., norm`` rows (index ``k`` of ``x(k)``)."""
        n = self.states.shape[1]
        w = csv.writer(fh, lineterminator="\n")
        header = ["k"]
        for j in range(n):
            header += [f"re_{j}", f"im_{j}"]
        w.writerow(header + ["norm"])
        for k, (x, nx) in enumerate(zip(self.states, self.growth_log)):
            row = [k]
            for z in x:
                row += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(row + [repr(float(nx))])


@dataclass(frozen=True)
class Cyclic:
    word: tuple

    def __post_init__(self):
        if len(self.word) == 0:
            raise DomainError("cyclic policy needs a nonempty word")


@dataclass(frozen=True)
class RandomSwitching:
    seed: int = 0


@dataclass(frozen=True)
class Greedy:
    """Pick the member maximizing the next state's norm (lowest index on ties)."""


def simulate_trajectory(F: MatrixFamily, x0, policy, K, norm="inf") -> Trajectory:
    x = np.asarray(x0, dtype=np.complex128).reshape(-1)
    if x.shape[0] != F.n:
        raise ShapeError(f"x0 has length {x.shape[0]}, family dimension is {F.n}")
    if not vector_norm(x, norm) > 0:
        raise DomainError("x0 must be nonzero")
    if K < 0:
        raise DomainError("K must be nonnegative")
    if isinstance(policy, Cyclic):
        for i in policy.word:
            if not 0 <= i < F.m:
                raise DomainError(f"policy index {i} outside 0..{F.m - 1}")
        choose = lambda k, x: policy.word[k % len(policy.word)]  # noqa: E731
    elif isinstance(policy, RandomSwitching):
        picks = np.random.default_rng(policy.seed).integers(0, F.m, size=K)
        choose = lambda k, x: int(picks[k])  # noqa: E731
    elif isinstance(policy, Greedy):
        def choose(k, x):
            return int(np.argmax([vector_norm(A @ x, norm) for A in F]))
    else:
        raise DomainError(f"unknown policy {policy!r}")

    states = [x]
    logs = [vector_norm(x, norm)]
    word = []
    truncated = False
    for k in range(K):
        with np.errstate(over="ignore", invalid="ignore"):
            i = choose(k, x)
            x = F[i] @ x
            nx = vector_norm(x, norm)
        if not np.isfinite(nx) or nx > OVERFLOW:
            truncated = True
            break
        word.append(i)
        states.append(x)
        logs.append(nx)
    return Trajectory(np.array(states), tuple(word), np.array(logs), truncated, norm)


@dataclass(frozen=True)
class UasProbe:
    growth_rate_estimate: float
    worst_trajectory: Trajectory
    seed: int

    def as_dict(self):
        return {
            "growth_rate_estimate": self.growth_rate_estimate,
            "seed": self.seed,
            "worst_word": list(self.worst_trajectory.word),
            "truncated": self.worst_trajectory.truncated,
        }


def uas_probe(F: MatrixFamily, trials=8, K=100, seed=0, x0=None, norm="inf") -> UasProbe:
    """Largest ``(||x(K)|| / ||x(0)||)^(1/K)`` over random and greedy switching.

    Each trial gets its own child seed of ``seed``; without ``x0`` the
    initial state is drawn from that stream too. A diagnostic lower estimate
    of the growth rate, never a certificate.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    best = None
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        if x0 is None:
            start = rng.normal(size=F.n)
            if not F.is_real():
                start = start + 1j * rng.normal(size=F.n)
        else:
            start = x0
        policy_seed = int(rng.integers(2**63))
        for policy in (RandomSwitching(policy_seed), Greedy()):
            t = simulate_trajectory(F, start, policy, K, norm)
            if best is None or t.growth_rate() > best.growth_rate():
                best = t
    return UasProbe(best.growth_rate(), best, seed)


# ---------------------------------------------------------------- robustness

@dataclass(frozen=True)
class AlphaProbe:
    alpha: float
    verdict: StabilityVerdict

    @property
    def stable(self):
        return self.verdict.status is Status.STABLE

    def as_dict(self):
        v = self.verdict
        return {"alpha": self.alpha, "status": v.status.value, "k": v.k, "norm": v.norm,
                "value": v.value, "witness": list(v.witness) if v.witness is not None else None,
                "boundary": v.boundary, "multiplications": v.bracket.multiplications_used}


@dataclass(frozen=True)
class RobustnessResult:
    alpha_star_lo: float
    alpha_star_hi: float
    probes: list = field(default_factory=list)
    sampled_lower_envelope: bool = False

    def as_dict(self):
        return {
            "alpha_star_lo": self.alpha_star_lo,
            "alpha_star_hi": self.alpha_star_hi,
            "sampled_lower_envelope": self.sampled_lower_envelope,
            "probes": [p.as_dict() for p in self.probes],
        }


def robustness_search(sys: PerturbedSystem, alpha_hi=1.0, tol_alpha=0.01,
                      per_alpha_budget=DEFAULT_BUDGET, sampling=None) -> RobustnessResult:
    """Bisect for the largest certified-stable uncertainty level.

    Stable verdicts move the lower end up; Unstable and Undecided both move
    the upper end down, so every probed ``alpha <= alpha_star_lo`` carries a
    Stable certificate. ``alpha = 0`` is not probed: ``rho(A0) < 1`` is
    checked directly.
    """
    if not alpha_hi > 0 or not tol_alpha > 0:
        raise DomainError("alpha_hi and tol_alpha must be positive")
    r0 = spectral_radius(sys.A0)
    if not r0 < 1:
        raise PreconditionError(f"nominal matrix is not stable: rho(A0) = {r0:.12g} >= 1")
    if sampling is None:
        sampling = VERTICES if sys.delta_norm == "inf" else Grid(9)

    probes = []

    def probe(alpha):
        F = build_perturbed_family(sys.with_alpha(alpha), sampling)
        p = AlphaProbe(alpha, decide_stability(F, budget=per_alpha_budget))
        probes.append(p)
        return p.stable

    envelope = is_sampled_envelope(sys)
    if probe(alpha_hi):
        return RobustnessResult(alpha_hi, alpha_hi, probes, envelope)
    lo, hi = 0.0, float(alpha_hi)
    while hi - lo > tol_alpha:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            lo = mid
        else:
            hi = mid
    return RobustnessResult(lo, hi, probes, envelope)
