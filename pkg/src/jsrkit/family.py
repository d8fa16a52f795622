"""Matrix families, words, memoized products and spectral-radius-preserving transforms.

Word convention: ``w = (i1, ..., ik)`` names ``A_i1 @ A_i2 @ ... @ A_ik``,
evaluated strictly left to right.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BudgetExceededError,
    DomainError,
    MalformedWordError,
    ShapeError,
    SingularTransformError,
)
from .matrix_core import as_matrix

Word = tuple  # tuple[int, ...]

DEFAULT_BUDGET = 10**7


@dataclass(frozen=True, eq=False)
class MatrixFamily:
    """A finite, ordered family of same-size square matrices."""

    members: tuple
    name: str = "family"
    labels: tuple = ()

    def __post_init__(self):
        members = tuple(as_matrix(a) for a in self.members)
        if not members:
            raise ShapeError("a family needs at least one matrix")
        n = members[0].shape[0]
        for i, a in enumerate(members):
            if a.shape != (n, n):
                raise ShapeError(f"member {i} has shape {a.shape}, expected {(n, n)}")
        labels = tuple(str(s) for s in self.labels) or tuple(f"A{i}" for i in range(len(members)))
        if len(labels) != len(members):
            raise ShapeError(f"{len(labels)} labels for {len(members)} matrices")
        stack = np.stack(members)
        stack.flags.writeable = False
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_stack", stack)

    @classmethod
    def of(cls, *matrices, name="family", labels=()):
        return cls(tuple(matrices), name=name, labels=tuple(labels))

    @property
    def n(self):
        return self.members[0].shape[0]

    @property
    def m(self):
        return len(self.members)

    @property
    def stack(self):
        """Members as a read-only ``(m, n, n)`` array."""
        return self._stack

    def __len__(self):
        return self.m

    def __getitem__(self, i):
        return self.members[i]

    def __iter__(self):
        return iter(self.members)

    def replace(self, members, name=None, labels=None):
        return MatrixFamily(tuple(members), name=self.name if name is None else name,
                            labels=self.labels if labels is None else labels)

    def is_real(self):
        return not np.any(self._stack.imag)


# ---------------------------------------------------------------- words

def check_word(F: MatrixFamily, w) -> Word:
    w = tuple(int(i) for i in w)
    if not w:
        raise MalformedWordError("empty word")
    bad = [i for i in w if not 0 <= i < F.m]
    if bad:
        raise MalformedWordError(f"word {w} has indices outside 0..{F.m - 1}: {bad}")
    return w


@dataclass
class ProductCache:
    """Prefix-keyed store of evaluated products for one family."""

    products: dict = field(default_factory=dict)
    hits: int = 0
    misses: int = 0
    family_id: int | None = None

    def bind(self, F):
        if self.family_id is None:
            self.family_id = id(F)
        elif self.family_id != id(F):
            raise ValueError("ProductCache is already bound to a different family")


def evaluate_word(F: MatrixFamily, w, cache: ProductCache | None = None) -> np.ndarray:
    """Product ``A_w1 @ ... @ A_wk`` (left to right); reuses cached prefixes."""
    w = check_word(F, w)
    if cache is None:
        P = F.members[w[0]]
        for i in w[1:]:
            P = P @ F.members[i]
        return np.array(P)
    cache.bind(F)
    start = len(w)
    while start > 0 and w[:start] not in cache.products:
        start -= 1
    if start == len(w):
        cache.hits += 1
        return np.array(cache.products[w])
    cache.misses += 1
    if start == 0:
        P = F.members[w[0]]
        cache.products[w[:1]] = P
        start = 1
    else:
        P = cache.products[w[:start]]
    for j in range(start, len(w)):
        P = P @ F.members[w[j]]
        cache.products[w[: j + 1]] = P
    return np.array(P)


def all_words(m, k, budget=DEFAULT_BUDGET) -> list:
    """All ``m**k`` words of length ``k`` in lexicographic order."""
    if m < 1 or k < 1:
        raise DomainError("need m >= 1 and k >= 1")
    if m**k > budget:
        raise BudgetExceededError(m**k, budget)
    return list(itertools.product(range(m), repeat=k))


def necklaces(m, k) -> list:
    """Canonical (lexicographically least rotation) necklaces, in lexicographic order.

    Fredricksen-Kessler-Maiorana successor rule: bump the last digit that can
    be bumped, refill periodically, keep the word when its period divides k.
    """
    if m < 1 or k < 1:
        raise DomainError("need m >= 1 and k >= 1")
    a = [0] * k
    out = [tuple(a)]
    while True:
        i = k - 1
        while i >= 0 and a[i] == m - 1:
            i -= 1
        if i < 0:
            return out
        a[i] += 1
        for j in range(i + 1, k):
            a[j] = a[j - i - 1]
        if k % (i + 1) == 0:
            out.append(tuple(a))


def count_necklaces(m, k):
    """Number of m-ary necklaces of length k (Moreau's formula)."""
    total = 0
    for d in range(1, k + 1):
        if k % d == 0:
            total += _phi(d) * m ** (k // d)
    return total // k


def _phi(n):
    result = n
    p = 2
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            result -= result // p
        p += 1
    if n > 1:
        result -= result // n
    return result


def rotations(w):
    return [w[i:] + w[:i] for i in range(len(w))]


def canonical_rotation(w):
    return min(rotations(tuple(w)))


def primitive_period(w):
    """Length of the shortest word ``u`` with ``w = u^(len(w)/len(u))``."""
    k = len(w)
    for p in range(1, k + 1):
        if k % p == 0 and tuple(w[:p]) * (k // p) == tuple(w):
            return p
    return k


def word_index(w, m):
    idx = 0
    for i in w:
        idx = idx * m + i
    return idx


# ---------------------------------------------------------------- transforms

def scale_family(F: MatrixFamily, alpha) -> MatrixFamily:
    return F.replace([alpha * a for a in F], name=f"{F.name}*{alpha}")


def similarity_transform(F: MatrixFamily, M) -> MatrixFamily:
    """Members ``A -> M A M^{-1}``."""
    M = as_matrix(M)
    if M.shape[0] != F.n:
        raise ShapeError(f"transform is {M.shape}, family dimension is {F.n}")
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e16:
        raise SingularTransformError(f"transform is singular (condition {cond:.3g})")
    if cond > 1e12:
        warnings.warn(f"ill-conditioned similarity transform (condition {cond:.3g})", stacklevel=2)
    Minv = np.linalg.inv(M)
    return F.replace([M @ a @ Minv for a in F], name=f"{F.name}~sim")


def transpose_family(F: MatrixFamily) -> MatrixFamily:
    return F.replace([a.T for a in F], name=f"{F.name}^T")


def conjugate_family(F: MatrixFamily) -> MatrixFamily:
    return F.replace([a.conj().T for a in F], name=f"{F.name}^*")


def abs_family(F: MatrixFamily) -> MatrixFamily:
    return F.replace([np.abs(a) for a in F], name=f"|{F.name}|")


def normalized_family(F: MatrixFamily, r) -> MatrixFamily:
    if not r > 0:
        raise DomainError(f"normalization constant must be positive, got {r}")
    return F.replace([a / r for a in F], name=f"{F.name}/{r:g}")


def block_upper_assemble(diag_families: Sequence[MatrixFamily], couplers=None, name="block") -> MatrixFamily:
    """Block upper triangular family from index-aligned diagonal families.

    ``couplers`` maps a block position ``(r, c)`` with ``r < c`` to a sequence
    of ``m`` off-diagonal blocks; missing positions are zero. With exactly two
    diagonal families a plain sequence is accepted for position ``(0, 1)``.
    """
    fams = list(diag_families)
    if not fams:
        raise ShapeError("no diagonal families given")
    m = fams[0].m
    if any(f.m != m for f in fams):
        raise ShapeError("diagonal families must have the same number of members")
    if couplers is None:
        couplers = {}
    elif not isinstance(couplers, dict):
        if len(fams) != 2:
            raise ShapeError("a coupler sequence needs exactly two diagonal families")
        couplers = {(0, 1): couplers}
    sizes = [f.n for f in fams]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    N = int(offs[-1])
    members = []
    for i in range(m):
        M = np.zeros((N, N), dtype=np.complex128)
        for b, f in enumerate(fams):
            M[offs[b]:offs[b + 1], offs[b]:offs[b + 1]] = f[i]
        for (r, c), blocks in couplers.items():
            if not 0 <= r < c < len(fams):
                raise ShapeError(f"coupler position {(r, c)} is not strictly upper triangular")
            if len(blocks) != m:
                raise ShapeError(f"coupler {(r, c)} has {len(blocks)} blocks, expected {m}")
            want = (sizes[r], sizes[c])
            blk = np.asarray(blocks[i], dtype=np.complex128)
            if blk.ndim < 2 and blk.size == want[0] * want[1]:
                blk = blk.reshape(want)
            if blk.shape != want:
                raise ShapeError(f"coupler {(r, c)} block {i} has shape {blk.shape}, expected {(sizes[r], sizes[c])}")
            M[offs[r]:offs[r + 1], offs[c]:offs[c + 1]] = blk
        members.append(M)
    return MatrixFamily(tuple(members), name=name, labels=fams[0].labels)
