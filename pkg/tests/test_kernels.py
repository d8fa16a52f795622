import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import families
from jsrkit import kernels
from jsrkit._accel import HAVE_NUMBA
from jsrkit.bounds import level_stats
from jsrkit.family import evaluate_word
from jsrkit.matrix_core import Norm, operator_norm, spectral_radius

CODES = (kernels.COLSUM, kernels.SPECTRAL, kernels.ROWSUM)
NORMS = (Norm.COLUMN_SUM, Norm.SPECTRAL, Norm.ROW_SUM)
BACKENDS = [False, True] if HAVE_NUMBA else [False]


def test_word_block_is_lexicographic():
    block = kernels.word_block(3, 4, 0, 81)
    assert [tuple(r) for r in block] == sorted(tuple(r) for r in block)
    assert tuple(kernels.word_block(3, 4, 5, 6)[0]) == (0, 0, 1, 2)


@pytest.mark.parametrize("use_numba", BACKENDS)
@given(F=families(), k=st.integers(1, 5))
def test_word_stats_match_direct_evaluation(use_numba, F, k):
    words = kernels.word_block(F.m, k, 0, F.m**k)
    mask = np.ones(len(words), dtype=bool)
    norms, radii, traces, _ = kernels.word_stats(F.stack, words, CODES, mask, use_numba=use_numba)
    for w, row, r, t in zip(words, norms, radii, traces):
        P = evaluate_word(F, tuple(w))
        for q, kind in enumerate(NORMS):
            assert row[q] == pytest.approx(operator_norm(P, kind), rel=1e-10, abs=1e-14)
        assert r == pytest.approx(spectral_radius(P), rel=1e-8, abs=1e-10)
        assert t == pytest.approx(abs(np.trace(P)), rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("use_numba", BACKENDS)
@pytest.mark.parametrize("m,k", [(1, 5), (2, 6), (3, 4)])
def test_one_multiplication_per_tree_node(use_numba, m, k):
    stack = np.stack([np.eye(2)] * m).astype(complex)
    words = kernels.word_block(m, k, 0, m**k)
    *_, mults = kernels.word_stats(stack, words, (kernels.ROWSUM,), use_numba=use_numba)
    assert mults == sum(m**d for d in range(2, k + 1))


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
@given(F=families(), k=st.integers(1, 6))
def test_backends_agree(F, k):
    a = level_stats(F, k, use_numba=False)
    b = level_stats(F, k, use_numba=True)
    assert a.multiplications == b.multiplications
    assert a.lower == pytest.approx(b.lower, rel=1e-9, abs=1e-12)
    for label in a.upper:
        assert a.upper[label] == pytest.approx(b.upper[label], rel=1e-9, abs=1e-12)


def test_masked_rows_are_nan():
    stack = np.stack([np.eye(2)]).astype(complex)
    words = kernels.word_block(1, 2, 0, 1)
    _, radii, traces, _ = kernels.word_stats(stack, words, (), np.zeros(1, dtype=bool))
    assert np.isnan(radii[0]) and np.isnan(traces[0])
