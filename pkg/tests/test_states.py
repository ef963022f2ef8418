import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bevc.criteria import ppt_check, product_in_range_search
from bevc.errors import DimensionError
from bevc.hilbert import (DensityOperator, flat_index, min_eigenvalue, partial_trace,
                          partial_transpose, project_local, pt_residual, range_projector, schmidt)
from bevc.states import (AlphaFamily, CVParams, apply_local_filter, build_choi, build_direct_sum,
                         build_psi, build_psi_mn, build_rho, build_sigma, direct_sum_components,
                         filter_to_sigma, locally_orthogonal, normalization,
                         published_pair_sum_closed_form, sigma_unnormalized)

ac_pairs = st.tuples(st.floats(0.05, 0.9), st.floats(0.05, 0.95)).filter(
    lambda t: t[0] < t[1] - 1e-3)


def brute_pair_sum(a, c, N):
    total = 0.0
    for m in range(2, N + 1):
        for n in range(1, m):
            total += c ** (2 * m) * a ** (2 * n) + a ** (2 * m) * c ** (-2 * m)
    return total


def test_params_validation():
    with pytest.raises(ValueError):
        CVParams(0.8, 0.5, 4)
    with pytest.raises(ValueError):
        CVParams(0.5, 1.0, 4)
    with pytest.raises(ValueError):
        CVParams(0.5, 0.8, 1)
    p = CVParams.from_beta_gamma(math.log(2), math.log(1.25), 5)
    assert p.a == pytest.approx(0.5) and p.c == pytest.approx(0.8)
    with pytest.raises(ValueError):
        CVParams.from_beta_gamma(0.5, 0.5, 5)


def test_psi_leading_amplitude_and_norm():
    psi = build_psi(CVParams(0.5, 0.8, 2))
    assert psi.amplitudes[flat_index(1, 1, (2, 2))] == 0.5
    assert psi.norm_sq == pytest.approx(0.25 + 0.0625)
    assert np.count_nonzero(psi.amplitudes) == 2


@pytest.mark.parametrize("N", [2, 5, 10, 20])
def test_psi_norm_within_geometric_tail(N):
    a = 0.5
    q = build_psi(CVParams(a, 0.8, N)).norm_sq
    limit = a * a / (1 - a * a)
    assert 0 <= limit - q <= a ** (2 * (N + 1)) / (1 - a * a) + 1e-16


@pytest.mark.parametrize("N", [2, 6, 13])
def test_psi_schmidt_rank_equals_truncation(N):
    assert schmidt(build_psi(CVParams(0.5, 0.8, N))).rank == N


def test_psi_mn_example():
    p = CVParams(0.5, 0.8, 3)
    v = build_psi_mn(1, 2, p)
    assert v.amplitudes[flat_index(1, 2, (3, 3))] == pytest.approx(0.32, abs=1e-15)
    assert v.amplitudes[flat_index(2, 1, (3, 3))] == pytest.approx(0.390625, abs=1e-15)
    assert np.count_nonzero(v.amplitudes) == 2
    assert schmidt(v).rank == 2


@given(ac_pairs, st.integers(2, 8), st.data())
def test_psi_mn_norm(ac, N, data):
    a, c = ac
    m = data.draw(st.integers(2, N))
    n = data.draw(st.integers(1, m - 1))
    v = build_psi_mn(n, m, CVParams(a, c, N))
    expect = c ** (2 * m) * a ** (2 * n) + a ** (2 * m) * c ** (-2 * m)
    assert v.norm_sq == pytest.approx(expect, rel=1e-12)
    assert schmidt(v).rank == 2


def test_psi_mn_index_order_enforced():
    p = CVParams(0.5, 0.8, 3)
    with pytest.raises(ValueError):
        build_psi_mn(2, 2, p)
    with pytest.raises(ValueError):
        build_psi_mn(3, 1, p)


@settings(max_examples=40)
@given(ac_pairs, st.integers(2, 9))
def test_rho_is_pt_invariant_state(ac, N):
    rho = build_rho(CVParams(*ac, N))
    assert abs(rho.trace - 1) <= 1e-12
    assert pt_residual(rho) <= 1e-12
    assert min_eigenvalue(rho) >= -1e-12


def test_rho_matches_outer_product_sum():
    p = CVParams(0.4, 0.7, 5)
    psi = build_psi(p)
    mat = psi.projector()
    for n, m in itertools.combinations(range(1, 6), 2):
        mat = mat + build_psi_mn(n, m, p).projector()
    rho = build_rho(p)
    assert np.allclose(rho.matrix, mat / np.trace(mat).real, atol=1e-15)
    assert rho.meta["A_N"] == pytest.approx(np.trace(mat).real, rel=1e-14)


def test_rho_at_two_levels_has_rank_two():
    rho = build_rho(CVParams(0.5, 0.8, 2))
    w = np.linalg.eigvalsh(rho.matrix)
    assert np.count_nonzero(w > 1e-12) == 2


def test_normalization_limits():
    nb = normalization(CVParams(0.5, 0.8, 60))
    assert nb.psi_norm_sq == pytest.approx(1 / 3, abs=1e-15)
    first_term = sum(0.8 ** (2 * m) * 0.5 ** (2 * n) for m in range(2, 400) for n in range(1, m))
    assert first_term == pytest.approx(0.25 * 0.8 ** 4 / ((1 - 0.64) * (1 - 0.16)), rel=1e-12)
    assert nb.pair_sum_limit == pytest.approx(brute_pair_sum(0.5, 0.8, 400), rel=1e-12)
    assert nb.pair_sum == pytest.approx(brute_pair_sum(0.5, 0.8, 60), rel=1e-12)


@pytest.mark.parametrize("a,c", [(0.5, 0.8), (0.3, 0.6), (0.2, 0.9), (0.7, 0.75)])
def test_tail_bound_dominates_true_tail(a, c):
    limit = a * a / (1 - a * a) + brute_pair_sum(a, c, 600)
    prev_tail, prev_A = math.inf, 0.0
    for N in (5, 10, 20, 40):
        nb = normalization(CVParams(a, c, N))
        assert nb.A == pytest.approx(nb.psi_norm_sq + nb.pair_sum, rel=1e-15)
        assert -1e-15 <= limit - nb.A <= nb.tail_bound * (1 + 1e-9) + 1e-15
        assert nb.tail_bound < prev_tail
        assert nb.A >= prev_A
        prev_tail, prev_A = nb.tail_bound, nb.A


def test_tail_bound_at_forty_levels_value():
    # the c^(2N) pair tail dominates: a^2 c^82 / ((1-a^2)(1-c^2)) + tiny terms
    nb = normalization(CVParams(0.5, 0.8, 40))
    lead = 0.25 / 0.75 * 0.64 ** 41 / 0.36
    assert nb.tail_bound == pytest.approx(lead, rel=1e-6)
    assert 1e-8 < nb.tail_bound < 1.1e-8


def test_published_closed_form_reported_not_adopted():
    nb = normalization(CVParams(0.5, 0.8, 40))
    expect = 0.5 ** 4 * 0.8 ** 4 / ((1 - 0.64) * (1 - 0.16)) + 0.5 ** 6 / ((0.64 - 0.25) * (0.64 - 0.0625))
    assert nb.published_closed_form == pytest.approx(expect, rel=1e-15)
    assert abs(nb.published_closed_form - nb.pair_sum_limit) > 0.1
    assert "differs" in nb.note
    assert published_pair_sum_closed_form(0.5, 0.5) is None
    assert published_pair_sum_closed_form(0.9, 0.85) is None


def choi_by_hand():
    idx = {(n, m): flat_index(n, m, (3, 3)) for n in range(1, 4) for m in range(1, 4)}
    mat = np.zeros((9, 9))
    for n in range(1, 4):
        for m in range(1, 4):
            mat[idx[n, n], idx[m, m]] = 1.0
    for n, m in [(1, 2), (1, 3), (2, 3)]:
        mat[idx[n, m], idx[n, m]] = 4.0
        mat[idx[m, n], idx[m, n]] = 0.25
        mat[idx[n, m], idx[m, n]] = mat[idx[m, n], idx[n, m]] = 1.0
    return mat


def test_sigma_choi_case():
    f = AlphaFamily(3, (2, 2))
    assert f.unnormalized_trace() == pytest.approx(15.75)
    raw = sigma_unnormalized(f)
    assert np.trace(raw).real == pytest.approx(15.75, abs=1e-12)
    assert np.array_equal(raw.real, choi_by_hand())
    choi = build_choi()
    assert np.allclose(choi.matrix, choi_by_hand() / 15.75, atol=1e-15)
    assert choi.meta["unnormalized_trace"] == pytest.approx(15.75)


@settings(max_examples=50)
@given(st.integers(2, 6), st.data())
def test_sigma_pt_invariant_and_trace_formula(K, data):
    alphas = data.draw(st.lists(st.floats(0.05, 20.0), min_size=K - 1, max_size=K - 1))
    f = AlphaFamily(K, tuple(alphas))
    raw = sigma_unnormalized(f)
    closed = K + sum((m - 1) * (f.alpha(m) ** 2 + f.alpha(m) ** -2) for m in range(2, K + 1))
    assert abs(np.trace(raw).real - closed) <= 1e-12 * closed
    sigma = build_sigma(f)
    assert pt_residual(sigma) <= 1e-12


def test_sigma_two_levels_has_product_in_range():
    sigma = build_sigma(AlphaFamily(2, (0.7,)))
    assert pt_residual(sigma) <= 1e-15
    assert ppt_check(sigma).is_ppt
    assert product_in_range_search(range_projector(sigma)).residual <= 1e-10


def test_alpha_family_validation():
    with pytest.raises(ValueError):
        AlphaFamily(3, (1.0,))
    with pytest.raises(ValueError):
        AlphaFamily(3, (1.0, -1.0))
    with pytest.raises(ValueError):
        AlphaFamily(1, ())
    assert AlphaFamily(4, (0.9, 0.5, 0.1)).strictly_decreasing
    assert not AlphaFamily(3, (2, 2)).strictly_decreasing


def test_filter_to_sigma_first_three_levels():
    p = CVParams(0.5, 0.8, 12)
    rows = [1, 2, 3]
    out = filter_to_sigma(project_local(build_rho(p), rows, rows), p, rows)
    target = build_sigma(AlphaFamily(3, (0.64, 0.512)))
    assert np.max(np.abs(out.matrix - target.matrix)) <= 1e-10
    assert out.meta["alphas"] == pytest.approx([0.64, 0.512])


def test_filter_to_sigma_two_levels():
    p = CVParams(0.5, 0.8, 6)
    out = filter_to_sigma(project_local(build_rho(p), [1, 2], [1, 2]), p, [1, 2])
    target = build_sigma(AlphaFamily(2, (0.64,)))
    assert np.max(np.abs(out.matrix - target.matrix)) <= 1e-10


def test_unit_filter_fixed_point():
    sigma = build_sigma(AlphaFamily(4, (0.9, 0.6, 0.3)))
    assert np.allclose(apply_local_filter(sigma, np.ones(4)).matrix, sigma.matrix, atol=1e-16)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.data())
def test_filter_after_projection_gives_sigma(N, data):
    p = CVParams(0.5, 0.8, N)
    size = data.draw(st.integers(1, min(6, N)))
    rows = sorted(data.draw(st.lists(st.integers(1, N), min_size=size, max_size=size, unique=True)))
    if len(rows) < 2:
        return
    out = filter_to_sigma(project_local(build_rho(p), rows, rows), p, rows)
    target = build_sigma(AlphaFamily(len(rows), tuple(0.8 ** n for n in rows[1:])))
    assert np.max(np.abs(out.matrix - target.matrix)) <= 1e-10


def test_filter_to_sigma_dimension_checks():
    p = CVParams(0.5, 0.8, 5)
    proj = project_local(build_rho(p), [1, 2], [1, 2])
    with pytest.raises(DimensionError):
        filter_to_sigma(proj, p, [1, 2, 3])


def test_direct_sum_single_block_is_block():
    choi = build_choi()
    out = build_direct_sum(choi, [1.0])
    assert out.dims == (3, 3)
    assert np.array_equal(out.matrix, choi.matrix)


def test_direct_sum_two_copies_locally_orthogonal_and_ppt():
    choi = build_choi()
    out = build_direct_sum(choi, [0.5, 0.5])
    assert out.dims == (6, 6)
    assert abs(out.trace - 1) <= 1e-12
    comps = direct_sum_components(choi, 2)
    assert locally_orthogonal(comps)
    ra = [partial_trace(c, "A") for c in comps]
    assert np.max(np.abs(ra[0] @ ra[1])) == 0
    assert ppt_check(out).is_ppt
    assert np.allclose(out.matrix, 0.5 * comps[0].matrix + 0.5 * comps[1].matrix)


def test_overlapping_copies_are_not_locally_orthogonal():
    choi = build_choi()
    comps = direct_sum_components(choi, 2, offsets=[0, 1])
    assert not locally_orthogonal(comps)


def test_direct_sum_rejects_bad_input():
    choi = build_choi()
    with pytest.raises(DimensionError):
        build_direct_sum(choi, [0.5, 0.5], offsets=[0, 2])
    with pytest.raises(ValueError):
        build_direct_sum(choi, [0.5, 0.4])
    with pytest.raises(ValueError):
        build_direct_sum(choi, [1.5, -0.5])


def test_direct_sum_of_ppt_blocks_is_ppt_for_custom_windows():
    block = build_sigma(AlphaFamily(3, (0.7, 0.2)))
    out = build_direct_sum(block, [0.2, 0.3, 0.5], offsets=[0, 6, 3])
    assert out.dims == (9, 9)
    assert min_eigenvalue(partial_transpose(out)) >= -1e-12
    assert isinstance(out, DensityOperator)
