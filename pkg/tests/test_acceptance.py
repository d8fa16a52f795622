"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they happen;
they are also repeated in the terminal summary.
"""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE, PHI, random_family
from jsrkit import gallery, io
from jsrkit.bounds import bracket, lower_bound_k, smp_candidates, upper_bound_k, validate_smp
from jsrkit.cli import main
from jsrkit.family import MatrixFamily, block_upper_assemble, scale_family, similarity_transform, transpose_family
from jsrkit.inclusion import PerturbedSystem, robustness_search
from jsrkit.matrix_core import Ellipsoidal, EllipsoidalShape, Norm, operator_norm
from jsrkit.special import Rule, try_closed_form
from jsrkit.structure import defectivity_probe

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(num, title, max_seconds=None):
    t0 = time.perf_counter()
    info = {}
    try:
        yield info
        elapsed = time.perf_counter() - t0
        if max_seconds is not None:
            assert elapsed < max_seconds, f"took {elapsed:.1f}s, limit {max_seconds}s"
    except BaseException as exc:
        detail = f"{type(exc).__name__}: {exc}".splitlines()[0]
        ACCEPTANCE.append((num, title, False, detail))
        print(f"\nFAIL {num:>2}  {title}  [{detail}]")
        raise
    detail = ", ".join(f"{k}={v}" for k, v in info.items())
    detail = f"{detail}, {elapsed:.2f}s" if detail else f"{elapsed:.2f}s"
    ACCEPTANCE.append((num, title, True, detail))
    print(f"\nPASS {num:>2}  {title}  [{detail}]")


def cli(tmp_path, capsys, *argv, family=None):
    args = [str(a) for a in argv]
    if family is not None:
        path = tmp_path / "family.json"
        path.write_text(io.emit_family(family))
        args.insert(1, str(path))
    code = main(args)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_criterion_01_four_member_inequality():
    with criterion(1, "lower_j <= upper_k on 200 random families", max_seconds=60) as info:
        rng = np.random.default_rng(2024)
        worst = -math.inf
        for _ in range(200):
            n, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            F = random_family(rng, n, m)
            recs = bracket(F, k_max=5).records
            assert len(recs) == 5
            lo = max(r.lower for r in recs)
            up = min(r.upper[label] for r in recs for label in r.upper)
            assert set(recs[0].upper) == {"rowsum", "spectral", "colsum"}
            worst = max(worst, lo - up)
            assert lo <= up + 1e-9
        info["max(lower-upper)"] = f"{worst:.3g}"


def test_criterion_02_blondel_pair():
    with criterion(2, "Blondel pair brackets phi with witness (0,1)", max_seconds=30) as info:
        F = gallery.blondel(1.0)
        A, B = F
        AB = np.array([[1 * 1 + 1 * 1, 1 * 0 + 1 * 1], [0 * 1 + 1 * 1, 0 * 0 + 1 * 1]])
        assert np.array_equal(A @ B, AB)
        oracle = math.sqrt((3 + math.sqrt(5)) / 2)  # eigenvalues of [[2,1],[1,1]]
        assert oracle == pytest.approx(PHI, abs=1e-15)
        br = bracket(F, k_max=8)
        assert abs(br.best_lower - oracle) <= 1e-9
        assert br.witness_lower == (0, 1)
        assert br.best_upper <= 1.10 * PHI
        info["best_lower"] = repr(br.best_lower)
        info["best_upper"] = f"{br.best_upper:.6f}"


def test_criterion_03_sign_flip_instance(tmp_path, capsys):
    with criterion(3, "sign-flip instance (2,1,-1,0) gives 1+sqrt(2)") as info:
        F = gallery.sign_flip(2, 1, -1, 0)
        oracle = 1 + math.sqrt(2)  # AB = [[5,-2],[-2,1]], rho = 3 + 2 sqrt 2
        code, rep = cli(tmp_path, capsys, "special", family=F)
        value = rep["result"]["closed_form"]["value"]
        assert code == 0 and abs(value - oracle) <= 1e-10
        lb2, w = lower_bound_k(F, 2)
        assert abs(lb2 - oracle) <= 1e-10
        info["rule"] = rep["result"]["closed_form"]["rule"]
        info["lower_2"] = repr(lb2)


def test_criterion_04_swap_instance(tmp_path, capsys):
    with criterion(4, "swap instance (0,2,1,0) gives 2") as info:
        F = gallery.swap_pair(0, 2, 1, 0)
        oracle = 2.0  # AB = diag(4, 1)
        code, rep = cli(tmp_path, capsys, "special", family=F)
        value = rep["result"]["closed_form"]["value"]
        assert code == 0 and abs(value - oracle) <= 1e-10
        lb2, w = lower_bound_k(F, 2)
        assert abs(lb2 - oracle) <= 1e-10
        info["rule"] = rep["result"]["closed_form"]["rule"]
        info["witness"] = w


def test_criterion_05_berger_wang(tmp_path, capsys):
    with criterion(5, "Berger-Wang (3, 1.1): first s.m.p. at length 4", max_seconds=10) as info:
        F = gallery.berger_wang(3, 1.1)
        lows = [lower_bound_k(F, j)[0] for j in (1, 2, 3)]
        assert all(v < 1 for v in lows)
        l4, w4 = lower_bound_k(F, 4)
        assert l4 >= 1 - 1e-10
        code, rep = cli(tmp_path, capsys, "decide", family=F)
        v = rep["result"]["verdict"]
        assert code == 1 and len(v["witness"]) == 4
        info["lower_1..3"] = "/".join(f"{x:.4f}" for x in lows)
        info["lower_4"] = repr(l4)
        info["witness"] = tuple(v["witness"])


def test_criterion_06_stochastic(tmp_path, capsys):
    with criterion(6, "stochastic demo sits on the boundary") as info:
        F = gallery.stochastic()
        assert lower_bound_k(F, 1)[0] == 1.0
        ups = [upper_bound_k(F, k, Norm.ROW_SUM)[0] for k in range(1, 7)]
        assert ups == [1.0] * 6
        code, rep = cli(tmp_path, capsys, "decide", family=F)
        assert code == 2
        info["boundary"] = rep["result"]["verdict"]["boundary"]


def test_criterion_07_ellipsoidal_norm():
    with criterion(7, "ellipsoidal norm: eigenvalue route equals similarity route") as info:
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 5))
            A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            P = X @ X.conj().T + 0.5 * np.eye(n)
            value = operator_norm(A, Ellipsoidal(EllipsoidalShape.from_matrix(P)))
            oracle = math.sqrt(max(abs(np.linalg.eigvals(A @ np.linalg.solve(P, A.conj().T) @ P))))
            err = abs(oracle - value) / (1 + value)
            worst = max(worst, err)
            assert err <= 1e-8
            ident = operator_norm(A, Ellipsoidal(EllipsoidalShape.identity(n)))
            assert abs(ident - np.linalg.norm(A, 2)) <= 1e-10
        info["max rel err"] = f"{worst:.2g}"


def test_criterion_08_invariance():
    with criterion(8, "lower bounds under scaling, similarity, transpose") as info:
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(50):
            n, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            F = random_family(rng, n, m, complex_=bool(rng.integers(2)))
            alpha = rng.uniform(0.2, 3.0) * (-1) ** int(rng.integers(2))
            while True:
                M = rng.normal(size=(n, n))
                if np.linalg.cond(M) < 1e2:
                    break
            variants = [(scale_family(F, alpha), abs(alpha)), (similarity_transform(F, M), 1.0),
                        (transpose_family(F), 1.0)]
            for k in range(1, 5):
                base = lower_bound_k(F, k)[0]
                for G, factor in variants:
                    got = lower_bound_k(G, k)[0]
                    err = abs(got - factor * base) / max(factor * base, 1e-300)
                    worst = max(worst, err)
                    assert got == pytest.approx(factor * base, rel=1e-8, abs=1e-300)
        info["max rel err"] = f"{worst:.2g}"


def test_criterion_09_smp_certification():
    with criterion(9, "{A, A*} certified with P = I at sigma_1") as info:
        F = gallery.conjugate_pair()
        cand = smp_candidates(F, k_max=4)[0]
        cert = validate_smp(F, cand)
        assert cert.certified
        assert np.allclose(cert.shape.P, np.eye(2), atol=1e-12)
        assert cert.value == pytest.approx(2.0, abs=1e-12)
        assert cert.value == pytest.approx(np.linalg.svd(F[0], compute_uv=False)[0], abs=1e-12)
        info["word"] = cand.word
        info["method"] = cert.method


def test_criterion_10_robustness():
    with criterion(10, "robustness radius of diag(0.5) + alpha * swap", max_seconds=60) as info:
        res = robustness_search(PerturbedSystem(np.diag([0.5, 0.5]), (np.array([[0.0, 1.0], [1.0, 0.0]]),)))
        assert res.alpha_star_lo <= 0.5 <= res.alpha_star_hi
        assert res.alpha_star_hi - res.alpha_star_lo <= 0.02
        below = [p for p in res.probes if p.alpha < res.alpha_star_lo]
        assert below and all(p.stable for p in below)
        # oracle: both vertices are symmetric, so rho(F_alpha) = max spectral norm = 0.5 + alpha
        info["interval"] = f"[{res.alpha_star_lo}, {res.alpha_star_hi}]"
        info["probes"] = len(res.probes)


def test_criterion_11_block_triangular():
    with criterion(11, "assembled 4x4 family: closed form = max of component brackets") as info:
        F1, F2 = gallery.sign_flip(2, 1, -1, 0), gallery.swap_pair(0, 2, 1, 0)
        F = block_upper_assemble([F1, F2], [np.array([[1.0, -2.0], [0.5, 3.0]]), np.ones((2, 2))])
        res = try_closed_form(F)
        assert res is not None and res.rule is Rule.BLOCK_TRIANGULAR
        parts = [bracket(G, k_max=8) for G in (F1, F2)]
        assert abs(res.value - max(b.best_lower for b in parts)) <= 1e-6
        assert abs(res.value - max(b.best_upper for b in parts)) <= 1e-6
        info["value"] = repr(res.value)


def test_criterion_12_defectivity():
    with criterion(12, "defectivity probes on J_2(1) and diag(1, 0.5)") as info:
        grow = defectivity_probe(gallery.jordan(2, 1.0), 1.0)
        assert grow.classification == "GrowthEvidence" and 0.8 <= grow.slope <= 1.2
        flat = defectivity_probe(MatrixFamily.of(np.diag([1.0, 0.5])), 1.0)
        assert flat.classification == "BoundedEvidence"
        info["slope"] = f"{grow.slope:.4f}"
