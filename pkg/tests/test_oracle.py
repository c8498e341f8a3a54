import math

import pytest

from defectwalk import bound, oracle
from defectwalk.bound import Branch, exists, lambda_pm, total_overlap, x_pm
from defectwalk.oracle import (
    PSI0_MINUS,
    PSI0_PLUS,
    ClosedForm,
    CostError,
    SignPairingError,
    asymptotic_origin_probability,
    char_poly_residual,
    path_sum_distribution,
    phi_grid,
    recurrence_chain_check,
    resolve_sign_pairing,
    run_suite,
    stationary_residual,
    total_variation,
)
from defectwalk.walk import PhaseDefect, evolve, initial_state, position_distribution

PLUS, MINUS = Branch.PLUS, Branch.MINUS


class TestStationaryResidual:
    def test_half_window_200(self):
        r = stationary_residual(PLUS, 0.5, 200)
        assert r.residual < 1e-10
        assert r.residual >= 0

    def test_small_window_attributes_to_tail(self):
        r = stationary_residual(PLUS, 0.5, 5)
        assert r.residual < 1e-14
        assert r.truncated_residual <= r.tail_bound
        assert r.truncated_residual > 1e3 * r.residual
        # squared tail it is built from: |x|^(2W+1) <= 2 * 0.04^5
        assert (r.tail_bound / 2) ** 2 <= 2 * 0.04**5

    def test_flipped_node0_phase(self):
        for b0 in (1j, -1j):
            if b0 == bound.NODE0_BETA[PLUS]:
                continue
            assert stationary_residual(PLUS, 0.5, 60, beta0=b0).residual > 0.1

    def test_near_boundary(self):
        # |x| ~ 0.94 here; truncation is visible but the eigen-residual is not
        r = stationary_residual(MINUS, 0.255, 200)
        assert r.residual < 1e-10
        assert r.truncated_residual > 1e-7


class TestCharPoly:
    def test_roots(self):
        lam, x = lambda_pm(PLUS, 0.3), x_pm(PLUS, 0.3)
        assert char_poly_residual(lam, x) < 1e-12
        assert char_poly_residual(lam, 1 / x) < 1e-12

    def test_negative_control(self):
        lam, x = lambda_pm(PLUS, 0.3), x_pm(PLUS, 0.3)
        assert char_poly_residual(lam, x + 0.01) > 1e-4


class TestChain:
    def test_passes_at_04(self):
        rep = recurrence_chain_check(0.4, PLUS)
        assert rep.passed, rep.first_failure

    def test_beta_from_alpha_explicit(self):
        cf = ClosedForm.from_formulas(PLUS, 0.4)
        for n in range(1, 5):
            assert abs(cf.beta(n + 1) - (cf.alpha(n + 1) - cf.lam * cf.alpha(n)) / (cf.lam - 1)) < 1e-14

    def test_c_minus_ratio(self):
        w = bound.omega_of(0.4)
        cf = ClosedForm.from_formulas(PLUS, 0.4)
        assert abs(cf.alpha(-1) / (cf.c * cf.x) - (w - 1j * w + 1j)) < 1e-14

    def test_grid(self):
        for phi in phi_grid(99):
            for b in Branch:
                if exists(b, phi):
                    rep = recurrence_chain_check(phi, b)
                    assert rep.passed, (phi, b, rep.first_failure, rep.residuals)

    @pytest.mark.parametrize("name", ClosedForm.PERTURBABLE)
    def test_perturbation_breaks(self, name):
        for phi, b in [(0.1, PLUS), (0.4, PLUS), (0.4, MINUS), (0.9, MINUS)]:
            rep = recurrence_chain_check(phi, b, perturb=(name, 1e-2))
            assert not rep.passed

    def test_nonexistent_branch(self):
        with pytest.raises(ValueError):
            recurrence_chain_check(0.1, MINUS)


class TestPathSum:
    @pytest.mark.parametrize("phi", [None, 0.2, 0.9])
    def test_two_steps(self, phi):
        d = dict(path_sum_distribution(1, 0, phi, 2))
        assert d == pytest.approx({-2: 0.25, 0: 0.5, 2: 0.25}, abs=1e-15)

    def test_zero_steps(self):
        assert path_sum_distribution(0.6, 0.8j, 0.3, 0) == [(0, pytest.approx(1.0))]

    def test_cost_limit(self):
        with pytest.raises(CostError):
            path_sum_distribution(1, 0, 0.3, 13)

    @pytest.mark.parametrize("coin", [PSI0_PLUS, PSI0_MINUS])
    def test_four_steps_one_sixth(self, coin):
        a = path_sum_distribution(*coin, 1 / 6, 4)
        b = position_distribution(evolve(initial_state(*coin), PhaseDefect(1 / 6), 4))
        assert total_variation(a, b) < 1e-12

    def test_twelve_steps(self):
        a = path_sum_distribution(0.6, 0.8j, 0.37, 12)
        b = position_distribution(evolve(initial_state(0.6, 0.8j), PhaseDefect(0.37), 12))
        assert total_variation(a, b) < 1e-12


class TestSignPairing:
    def test_one_sixth(self):
        p = resolve_sign_pairing(1 / 6)
        assert p.existing_branch == "plus"
        probs = sorted([p.origin_probability_plus, p.origin_probability_minus])
        assert probs[0] < 0.02 and probs[1] > 0.1
        assert p.localizing == "psi0-"
        assert p.residual_resolved < 1e-10 < 0.1 < p.residual_flipped

    def test_phi_independent(self):
        a, b = resolve_sign_pairing(1 / 6), resolve_sign_pairing(0.85)
        assert a.orthogonal == b.orthogonal == {"plus": "psi0+", "minus": "psi0-"}
        assert b.localizing == "psi0+"

    def test_requires_single_branch(self):
        with pytest.raises(ValueError):
            resolve_sign_pairing(0.5)

    def test_library_convention_mismatch_is_fatal(self, monkeypatch):
        monkeypatch.setitem(bound.NODE0_BETA, PLUS, 1j)
        with pytest.raises(SignPairingError):
            resolve_sign_pairing(1 / 6)

    def test_route_disagreement_is_fatal(self, monkeypatch):
        monkeypatch.setattr(oracle, "PSI0_PLUS", PSI0_MINUS)
        monkeypatch.setattr(oracle, "PSI0_MINUS", PSI0_PLUS)
        with pytest.raises(SignPairingError):
            resolve_sign_pairing(1 / 6)

    def test_overlap_shapes(self):
        # coin |0> overlaps everywhere; psi0+ vanishes on (0, 1/4] only
        g = phi_grid(99)
        zero = [total_overlap(p, 1, 0).total for p in g]
        dashed = [total_overlap(p, *PSI0_PLUS).total for p in g]
        assert all(f > 0 for f in zero)
        assert all(f == 0 for p, f in zip(g, dashed) if p <= 0.25)
        assert all(f > 0 for p, f in zip(g, dashed) if p > 0.25)


class TestAsymptotics:
    def test_zero_overlap_state(self):
        rep = asymptotic_origin_probability(*PSI0_PLUS, 1 / 6)
        assert rep.overlap == 0
        assert rep.empirical < 0.01

    def test_half_coin_zero(self):
        rep = asymptotic_origin_probability(1, 0, 0.5)
        assert abs(rep.empirical - rep.time_average) < 0.01
        # degenerate |x+| = |x-| but distinct eigenvalues: cross terms still average out
        assert lambda_pm(PLUS, 0.5) != lambda_pm(MINUS, 0.5)
        assert rep.time_average == pytest.approx(0.8 * 0.8)

    def test_defect_free(self):
        rep = asymptotic_origin_probability(1, 0, None)
        assert rep.time_average == 0 and rep.overlap == 0
        assert rep.empirical < 0.01

    def test_overlap_exceeds_asymptote(self):
        # F counts the bound-state weight; only a fraction 1 + x of it sits on node 0
        rep = asymptotic_origin_probability(*PSI0_MINUS, 1 / 6)
        x = x_pm(PLUS, 1 / 6)
        assert rep.overlap == pytest.approx(1 + x)
        assert rep.time_average == pytest.approx((1 + x) ** 2)
        assert rep.time_average < rep.overlap

    def test_mismatch_raises(self, monkeypatch):
        monkeypatch.setattr(oracle, "overlap_F", lambda *a: 0.5)
        with pytest.raises(oracle.OracleFailure):
            asymptotic_origin_probability(1, 0, 0.5)


def test_bisection_independent_of_exists():
    assert abs(oracle.bisect_existence_boundary(MINUS, 0.1, 0.4) - 0.25) < 1e-9
    assert abs(oracle.bisect_existence_boundary(PLUS, 0.6, 0.9) - 0.75) < 1e-9
    with pytest.raises(ValueError):
        oracle.bisect_existence_boundary(PLUS, 0.1, 0.4)


def test_suite_report():
    rep = run_suite()
    assert rep["passed"], [c for c in rep["checks"] if not c["passed"]]
    assert rep["sign_pairing"]["localizing"] == "psi0-"
    names = {c["name"] for c in rep["checks"]}
    assert {"eigen_residual", "derivation_chain", "path_sum_equivalence", "sign_pairing"} <= names


def test_suite_negative_control_mode():
    rep = run_suite(perturb=1e-2)
    assert not rep["passed"]
    failing = [c["name"] for c in rep["checks"] if not c["passed"]]
    assert len(failing) == len(ClosedForm.PERTURBABLE)
    assert all(name.startswith("derivation_chain[perturbed") for name in failing)
    assert not math.isnan(rep["checks"][0]["value"])
