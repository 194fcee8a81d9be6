"""Tests for the symbolic position-space realization."""

import math

import numpy as np
import pytest

from biquon import bicoherent, qcore
from biquon.positionrep import (
    AnalyticState,
    Grid,
    GridFunction,
    PositionParams,
    SupportEscapeError,
    apply_a,
    apply_a_dagger,
    apply_b,
    apply_b_dagger,
    build_families,
    coefficient_recursion,
    default_grid,
    family_norms,
    gram_condition,
    grid_norm,
    inner,
    l_value,
    ladder_check,
    norm_formula_check,
    norm_sq_formula,
    phi_state,
    psi_state,
    qmutation_grid_check,
    similarity_check,
    state_to_csv,
    theta_conjugacy_check,
    vacuum_check,
    vacuum_phi,
    vacuum_psi,
)

PARAMS = PositionParams(0.5, 0.7)
GRID = default_grid(PARAMS.gamma)


class TestParams:
    def test_alpha_inverts_q(self):
        for q in (0.1, 0.5, 0.93):
            p = PositionParams(q)
            assert math.exp(-2.0 * p.alpha ** 2) == pytest.approx(q, abs=1e-14)

    @pytest.mark.parametrize("q", [0.0, 1.0, 1.5, -0.3])
    def test_rejects_bad_q(self, q):
        with pytest.raises(ValueError):
            PositionParams(q)


class TestAnalyticState:
    def test_translation_matches_resampling(self):
        state = AnalyticState([(np.array([0.3, 1.0]), 0.2 + 0.4j)])
        x = np.linspace(-3, 3, 41)
        shifted = state.translate(0.5)
        assert np.allclose(shifted.sample(x), state.sample(x + 0.5), atol=1e-13)

    def test_exponent_shift(self):
        state = vacuum_phi(PARAMS)
        x = GRID.x
        assert np.allclose(state.shift_exponent(0.3).sample(x),
                           np.exp(0.3 * x) * state.sample(x), atol=1e-12)

    def test_merge_cancels_opposite_terms(self):
        p = np.array([1.0 + 0j])
        state = AnalyticState([(p, 0.5), (-p, 0.5)])
        assert state.terms == []

    def test_boundary_escape_detected(self):
        wide = AnalyticState.gaussian(1.0, 0.0)
        narrow = Grid(-2.0, 2.0, 64)
        with pytest.raises(SupportEscapeError):
            GridFunction.from_state(wide, narrow)
        GridFunction.from_state(wide, default_grid(0.0))   # must not raise


class TestVacua:
    def test_annihilation_is_exact(self):
        rep = vacuum_check(PARAMS, GRID)
        assert rep["a_phi0"] < 1e-12
        assert rep["bdag_psi0"] < 1e-12

    def test_pairing_normalized(self):
        rep = vacuum_check(PARAMS, GRID)
        assert abs(rep["pairing"] - 1.0) < 1e-10

    def test_vacuum_norm_squared(self):
        # ||phi_0||^2 = e^{gamma^2} since L_0 = 1
        got = grid_norm(GRID, vacuum_phi(PARAMS)) ** 2
        assert got == pytest.approx(math.exp(PARAMS.gamma ** 2), rel=1e-12)


class TestLadderAction:
    def test_first_excited_closed_form(self):
        phi0 = vacuum_phi(PARAMS)
        got = apply_b(PARAMS, phi0) * (1.0 / qcore.beta(PARAMS.q, 0))
        al = PARAMS.alpha
        pref = -1j / PARAMS.sqrt_1mq
        expected = AnalyticState([
            (np.array([pref * math.pi ** -0.25]),
             PARAMS.gamma + 1.5j * al + 2j * al),
            (np.array([-pref * math.pi ** -0.25 * math.exp(-al * al)]),
             PARAMS.gamma + 1.5j * al),
        ])
        assert grid_norm(GRID, got - expected) < 1e-12

    def test_gamma_zero_collapses_to_adjoint_pair(self):
        p0 = PositionParams(0.5, 0.0)
        f = AnalyticState([(np.array([0.2, 0.0, 1.0]), 0.3 + 0.1j)])
        x = default_grid(0.0).x
        assert np.allclose(apply_b(p0, f).sample(x),
                           apply_a_dagger(p0, f).sample(x), atol=1e-13)
        assert np.allclose(apply_a(p0, f).sample(x),
                           apply_b_dagger(p0, f).sample(x), atol=1e-13)

    def test_ladder_relations_on_grid(self):
        rep = ladder_check(PARAMS, 6, GRID)
        assert rep["max_residual"] < 1e-10

    def test_qmutation_identity(self):
        phis, _ = build_families(PARAMS, 2)
        hermite_like = AnalyticState([(np.array([0.0, 0.0, 1.0]), 0.0)])
        resid = qmutation_grid_check(
            PARAMS, [phis[0], hermite_like, phis[2]], GRID)
        assert resid < 1e-10


class TestCoefficients:
    def test_paper_rows(self):
        table = coefficient_recursion(PARAMS, 2)
        e = math.exp(-PARAMS.alpha ** 2)
        assert np.allclose(table.row(0), [1.0])
        assert np.allclose(table.row(1), [-e, 1.0])
        assert np.allclose(table.row(2), [e * e, -e - e ** 3, 1.0])

    def test_leading_coefficient_is_one(self):
        table = coefficient_recursion(PARAMS, 10)
        for n in range(11):
            assert table.row(n)[n] == pytest.approx(1.0, abs=1e-14)

    def test_rows_match_ladder_built_states(self):
        # independent route: build phi_n by ladder action and read the
        # coefficients off the exponent structure
        table = coefficient_recursion(PARAMS, 5)
        phis, _ = build_families(PARAMS, 5)
        al = PARAMS.alpha
        bs = qcore.BetaSequence(PARAMS.q, 6)
        for n in range(6):
            pref = math.pi ** -0.25 / bs.factorial(n - 1) \
                * (-1j / PARAMS.sqrt_1mq) ** n
            w0 = PARAMS.gamma + 1.5j * al
            got = np.zeros(n + 1, dtype=complex)
            for poly, w in phis[n].terms:
                k = round((w - w0).imag / (2 * al))
                got[k] = poly[0] / pref
            assert np.allclose(got, table.row(n), atol=1e-12)

    def test_gamma_independence(self):
        t1 = coefficient_recursion(PositionParams(0.5, 0.3), 6)
        t2 = coefficient_recursion(PositionParams(0.5, 0.9), 6)
        for n in range(7):
            assert np.array_equal(t1.row(n), t2.row(n))

    def test_states_from_rows_match_ladder(self):
        phis, psis = build_families(PARAMS, 4)
        table = coefficient_recursion(PARAMS, 4)
        for n in range(5):
            assert grid_norm(GRID, phis[n] - phi_state(PARAMS, n, table)) < 1e-12
            assert grid_norm(GRID, psis[n] - psi_state(PARAMS, n, table)) < 1e-12


class TestSimilarity:
    def test_gamma_zero_is_identity(self):
        rep = similarity_check(PositionParams(0.5, 0.0), 4)
        assert rep["similarity_phi"] < 1e-13
        assert rep["similarity_psi"] < 1e-13

    def test_pointwise_match(self):
        rep = similarity_check(PARAMS, 6)
        assert rep["similarity_phi"] < 1e-11
        assert rep["similarity_psi"] < 1e-11

    def test_biorthogonality(self):
        rep = similarity_check(PARAMS, 6)
        assert rep["biorthogonality"] < 1e-9

    def test_specific_level(self):
        p = PositionParams(0.5, 0.7)
        base = PositionParams(0.5, 0.0)
        g = default_grid(p.gamma)
        got = phi_state(p, 2).sample(g.x)
        ref = np.exp(p.gamma * g.x) * phi_state(base, 2).sample(g.x)
        assert np.max(np.abs(got - ref)) < 1e-11


class TestNormFormula:
    def test_ground_level(self):
        assert l_value(PARAMS, 0) == pytest.approx(1.0, abs=1e-15)
        assert norm_sq_formula(PARAMS, 0) == pytest.approx(
            math.exp(PARAMS.gamma ** 2), rel=1e-14)

    def test_first_level_quadrature_vs_formula(self):
        p = PositionParams(0.5, 0.3)
        g = default_grid(p.gamma)
        got = grid_norm(g, phi_state(p, 1)) ** 2
        assert abs(got - norm_sq_formula(p, 1)) / norm_sq_formula(p, 1) < 1e-6

    @pytest.mark.parametrize("q", [0.3, 0.6])
    @pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0])
    def test_formula_matches_quadrature(self, q, gamma):
        rep = norm_formula_check(PositionParams(q, gamma), 5)
        assert rep["max_rel_err"] < 1e-6

    def test_norm_symmetry_between_families(self):
        rep = norm_formula_check(PARAMS, 6)
        assert rep["norm_symmetry"] < 1e-10

    def test_l_values_real_and_bounded(self):
        for q in (0.3, 0.6):
            p = PositionParams(q, 0.5)
            for n in range(9):
                lv = l_value(p, n)
                assert abs(lv.imag) < 1e-14 * max(1.0, abs(lv.real))
                assert lv.real <= (n + 1) ** 2


class TestRadius:
    @pytest.mark.parametrize("q", [0.3, 0.5, 0.8])
    def test_guaranteed_radius_within_one_percent(self, q):
        params = PositionParams(q, 0.5)
        norms = family_norms(params, 40)
        rep = bicoherent.radius_report(norms, norms, q, "position")
        assert abs(rep.rho - math.sqrt(1.0 - q)) / math.sqrt(1.0 - q) < 0.01

    def test_empirical_radius_sees_the_larger_true_disc(self):
        # measured coefficient decay reflects the true convergence radius
        # 1/sqrt(1-q), strictly larger than the guaranteed bound
        q = 0.5
        params = PositionParams(q, 0.5)
        norms = family_norms(params, 40)
        rep = bicoherent.radius_report(norms, norms, q, "position")
        assert rep.empirical_rho_phi == pytest.approx(
            qcore.disc_radius(q), rel=0.02)
        assert rep.empirical_rho_phi > rep.rho


class TestTheta:
    def test_conjugacy_on_decaying_states(self):
        phis, _ = build_families(PARAMS, 3)
        assert theta_conjugacy_check(PARAMS, phis, GRID) < 1e-10


def test_gram_condition_is_finite_evidence():
    cond = gram_condition(PARAMS, 6, GRID)
    assert 1.0 <= cond < 1e6


def test_state_csv(tmp_path):
    table = coefficient_recursion(PARAMS, 1)
    out = tmp_path / "phi1.csv"
    with out.open("w", newline="") as fh:
        state_to_csv(phi_state(PARAMS, 1, table), GRID, fh)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "x,re,im"
    assert len(lines) == GRID.n + 1


def test_inner_accepts_mixed_arguments():
    phi0 = vacuum_phi(PARAMS)
    vals = phi0.sample(GRID.x)
    direct = inner(GRID, phi0, phi0)
    mixed = inner(GRID, vals, phi0)
    assert direct == pytest.approx(mixed, rel=1e-14)
    gf = GridFunction.from_state(vacuum_psi(PARAMS), GRID)
    assert inner(GRID, gf, gf).real > 0
