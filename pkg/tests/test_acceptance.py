"""The ten acceptance criteria, at their stated tolerances.

Run with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""
import itertools
import math
import time

import numpy as np
import pytest

from bevc.criteria import (BOUND_ENTANGLED_CERTIFIED, alpha_decision, certify, ppt_check,
                           product_in_range_search)
from bevc.config import DEFAULT
from bevc.hilbert import min_eigenvalue, partial_transpose, project_local, range_projector, schmidt
from bevc.optics import (ProtocolParams, assemble_protocol_state, delta_k, kerr_delta_approx,
                         pair_projector_sum, protocol_terms, to_state_levels, uniform_phases)
from bevc.sampling import random_alpha_family
from bevc.states import (AlphaFamily, CVParams, build_psi, build_rho, build_sigma, normalization)
from bevc.witness import (InducedMap, build_witness, sample_map_positivity,
                          sample_product_minimum)

ACCEPTANCE_SEED = 20000415


def projector(op):
    return range_projector(op, DEFAULT.range_tol)


@pytest.mark.criterion(1, "PT-invariance of rho on the (a, c) x N grid")
def test_criterion_01_pt_invariance(record_property):
    t0 = time.perf_counter()
    worst_diff, worst_eig = 0.0, math.inf
    for a, c, N in itertools.product([0.3, 0.4, 0.5], [0.6, 0.7, 0.8], [8, 12]):
        rho = build_rho(CVParams(a, c, N))
        pt = partial_transpose(rho)
        worst_diff = max(worst_diff, float(np.max(np.abs(rho.matrix - pt.matrix))))
        worst_eig = min(worst_eig, min_eigenvalue(pt))
    elapsed = time.perf_counter() - t0
    record_property("max_diff", f"{worst_diff:.1e}")
    record_property("min_pt_eig", f"{worst_eig:.2e}")
    record_property("seconds", f"{elapsed:.1f}")
    assert worst_diff <= 1e-12
    assert worst_eig >= -1e-10
    assert elapsed <= 60


@pytest.mark.criterion(2, "Choi matrix: PPT, exact and numerical entanglement")
def test_criterion_02_choi(record_property):
    t0 = time.perf_counter()
    sigma = build_sigma(AlphaFamily(3, (2, 2)))
    ppt = ppt_check(sigma)
    decision = alpha_decision(AlphaFamily(3, (2, 2)))
    res = product_in_range_search(projector(sigma))
    elapsed = time.perf_counter() - t0
    record_property("min_pt_eig", f"{ppt.min_pt_eigenvalue:.2e}")
    record_property("residual", f"{res.residual:.6g}")
    record_property("seconds", f"{elapsed:.2f}")
    assert ppt.min_pt_eigenvalue >= -1e-10
    assert decision.entangled_certified and decision.violated_indices == {2}
    assert res.restarts == 64
    assert np.all(res.restart_values > 1e-6)
    assert res.residual > 1e-6
    assert elapsed <= 10


@pytest.mark.criterion(3, "alpha_decision vs numerical search on 200 random families")
def test_criterion_03_agreement(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(ACCEPTANCE_SEED)
    disagreements, certified = [], 0
    for i in range(200):
        fam = random_alpha_family(rng, k_max=6)
        d = alpha_decision(fam)
        res = product_in_range_search(projector(build_sigma(fam)))
        certified += d.entangled_certified
        ok = res.residual > 1e-6 if d.entangled_certified else res.residual < 1e-8
        if not ok:
            disagreements.append((i, fam, res.residual))
    elapsed = time.perf_counter() - t0
    record_property("entangled", f"{certified}/200")
    record_property("disagreements", len(disagreements))
    record_property("seconds", f"{elapsed:.1f}")
    assert not disagreements, disagreements
    assert elapsed <= 300


def row_subsets(N, seed):
    rng = np.random.default_rng(seed)
    out = []
    for size in (3, 4, 5):
        out += [list(range(s, s + size)) for s in range(1, N - size + 2)]
        picked = []
        while len(picked) < 3:
            rows = sorted(int(x) for x in rng.choice(np.arange(1, N + 1), size, replace=False))
            if rows[-1] - rows[0] != size - 1 and rows not in picked:
                picked.append(rows)
        out += picked
    return out


@pytest.mark.criterion(4, "projected rho(N=12) certified for row subsets of size 3..5")
def test_criterion_04_projected_states(record_property):
    t0 = time.perf_counter()
    rho = build_rho(CVParams(0.5, 0.8, 12))
    subsets = row_subsets(12, ACCEPTANCE_SEED)
    failures = []
    worst = math.inf
    for rows in subsets:
        rep = certify(project_local(rho, rows, rows))
        worst = min(worst, rep.search.residual)
        if rep.verdict != BOUND_ENTANGLED_CERTIFIED:
            failures.append((rows, rep.verdict, rep.search.residual))
    elapsed = time.perf_counter() - t0
    record_property("subsets", len(subsets))
    record_property("min_residual", f"{worst:.3e}")
    record_property("seconds", f"{elapsed:.1f}")
    assert len(subsets) == 36
    assert not failures, failures
    assert elapsed <= 300


@pytest.mark.criterion(5, "uniform alpha: product vector e(x)e found in the range")
def test_criterion_05_uniform_alpha(record_property):
    res = product_in_range_search(projector(build_sigma(AlphaFamily(3, (1, 1)))))
    e = np.ones(9) / 3
    overlap = abs(np.vdot(e, res.best_product.vector())) ** 2
    record_property("residual", f"{res.residual:.1e}")
    record_property("overlap_defect", f"{1 - overlap:.1e}")
    assert res.residual <= 1e-10
    assert overlap >= 1 - 1e-6


@pytest.mark.criterion(6, "optical protocol reproduces rho (N=10, k_max=8)")
def test_criterion_06_optics(record_property):
    p = ProtocolParams(math.log(2), math.log(1.25), 8)
    N = 10
    state = to_state_levels(assemble_protocol_state(p, N))
    ref = build_rho(CVParams(0.5, 0.8, N - 1))
    dist = float(np.linalg.norm(state.matrix - ref.matrix))
    per_k = max(float(np.max(np.abs(t - pair_projector_sum(k, p, N))))
                for k, t in enumerate(protocol_terms(p, N), start=1))
    record_property("frobenius", f"{dist:.1e}")
    record_property("per_k", f"{per_k:.1e}")
    assert dist <= 1e-10
    assert per_k <= 1e-12


@pytest.mark.criterion(7, "Kerr averaging: exact delta_k at L=32, aliasing at L=4")
def test_criterion_07_kerr(record_property):
    N = 16
    errors = []
    for k in range(9):
        approx = kerr_delta_approx(k, uniform_phases(32), N)
        errors.append(max(approx.error, float(np.max(np.abs(approx.operator - delta_k(k, N))))))
    aliased = kerr_delta_approx(1, uniform_phases(4), N)
    record_property("max_error_L32", f"{max(errors):.1e}")
    record_property("error_L4", f"{aliased.error:.3g}")
    assert max(errors) <= 1e-13
    assert aliased.error > 0.1 and aliased.aliased


@pytest.mark.criterion(8, "witness and induced positive, non-CP map for the Choi matrix")
def test_criterion_08_witness(record_property):
    sigma = build_sigma(AlphaFamily(3, (2, 2)))
    w = build_witness(sigma)
    tr = float(np.trace(w.W.matrix @ sigma.matrix).real)
    prod_min = sample_product_minimum(w, 10_000, ACCEPTANCE_SEED)
    lam = InducedMap(w)
    choi_min = float(np.linalg.eigvalsh(lam.choi_matrix())[0])
    map_min = sample_map_positivity(lam, 1_000, ACCEPTANCE_SEED)
    record_property("trace_W_sigma", f"{tr:.6g}")
    record_property("min_product", f"{prod_min:.3g}")
    record_property("min_choi_eig", f"{choi_min:.3g}")
    record_property("min_map_eig", f"{map_min:.3g}")
    assert tr == pytest.approx(-w.epsilon, abs=1e-10) and tr < 0
    assert prod_min >= -1e-9
    assert choi_min < 0
    assert map_min >= -1e-9


@pytest.mark.criterion(9, "normalization: tail <= 1e-12 at N=40, (a, c) = (0.5, 0.8)")
def test_criterion_09_normalization(record_property):
    p40 = CVParams(0.5, 0.8, 40)
    nb = normalization(p40)
    true_tail = nb.psi_norm_sq_limit + nb.pair_sum_limit - nb.A
    # Cauchy: successive increments shrink and stay under the bound
    incs = [normalization(CVParams(0.5, 0.8, N + 1)).A - normalization(CVParams(0.5, 0.8, N)).A
            for N in range(30, 40)]
    record_property("tail", f"{true_tail:.3e}")
    record_property("tail_bound", f"{nb.tail_bound:.3e}")
    record_property("closed_form", f"{nb.published_closed_form:.6g}")
    record_property("pair_sum_limit", f"{nb.pair_sum_limit:.6g}")
    print(nb.note)
    assert all(b < a for a, b in zip(incs, incs[1:]))
    assert incs[-1] <= normalization(CVParams(0.5, 0.8, 39)).tail_bound
    assert nb.published_closed_form is not None and "differs" in nb.note
    assert true_tail <= 1e-12
    assert nb.tail_bound <= 1e-12


@pytest.mark.criterion(10, "Schmidt rank of the truncated |Psi> equals K for K = 2..30")
def test_criterion_10_schmidt_rank(record_property):
    ranks = [schmidt(build_psi(CVParams(0.5, 0.8, K)), 1e-12).rank for K in range(2, 31)]
    record_property("ranks", f"{ranks[0]}..{ranks[-1]}")
    assert ranks == list(range(2, 31))


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
