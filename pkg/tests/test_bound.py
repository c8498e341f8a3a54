import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defectwalk.bound import (
    Branch,
    BoundState,
    DomainError,
    ToleranceError,
    amplitude_at,
    bound_state,
    exists,
    lambda_pm,
    materialize,
    omega_of,
    overlap_F,
    total_overlap,
    x_pm,
    x_pm_omega,
)
from defectwalk.oracle import PSI0_MINUS, PSI0_PLUS, char_poly_residual, phi_grid
from defectwalk.walk import NormalizationError, initial_state

PLUS, MINUS = Branch.PLUS, Branch.MINUS
S3 = math.sqrt(3)


@pytest.mark.parametrize("phi, w", [(0.5, -1), (0.25, 1j), (1 / 6, 0.5 + 0.5j * S3)])
def test_omega_of(phi, w):
    assert abs(omega_of(phi) - w) < 1e-15


@pytest.mark.parametrize("phi", [0, 1, -0.2, 1.0001])
def test_omega_domain(phi):
    with pytest.raises(DomainError):
        omega_of(phi)


def test_lambda_at_half():
    assert abs(lambda_pm(PLUS, 0.5) - (-4 - 3j) / 5) < 1e-15
    assert abs(lambda_pm(MINUS, 0.5) - (-4 + 3j) / 5) < 1e-15


def test_lambda_unit_modulus_sweep():
    for phi in np.linspace(0.001, 0.999, 999):
        for b in Branch:
            assert abs(abs(lambda_pm(b, phi)) - 1) < 1e-12


def test_x_values():
    assert x_pm(PLUS, 0.5) == pytest.approx(-0.2, abs=1e-15)
    assert x_pm(MINUS, 0.5) == pytest.approx(-0.2, abs=1e-15)
    assert x_pm(PLUS, 1 / 6) == pytest.approx(1 / (1 - S3 - 3), abs=1e-15)
    assert x_pm(PLUS, 1 / 6) == pytest.approx(-0.267949, abs=1e-6)
    assert x_pm(MINUS, 0.25) == pytest.approx(-1.0, abs=1e-15)


@settings(max_examples=200)
@given(phi=st.floats(1e-6, 1 - 1e-6), branch=st.sampled_from(list(Branch)))
def test_x_forms_agree_and_satisfy_characteristic(phi, branch):
    x = x_pm(branch, phi)
    assert abs(x - x_pm_omega(branch, phi)) < 1e-12
    lam = lambda_pm(branch, phi)
    assert char_poly_residual(lam, x) < 1e-12
    assert char_poly_residual(lam, 1 / x) < 1e-12


def test_exists_examples():
    assert not exists(MINUS, 1 / 6)
    assert exists(PLUS, 1 / 6)
    assert exists(PLUS, 0.7) and exists(MINUS, 0.7)
    assert not exists(MINUS, 0.25) and exists(PLUS, 0.25)
    assert not exists(PLUS, 0.75) and exists(MINUS, 0.75)


def test_exists_matches_decay_parameter():
    for phi in np.linspace(0.0005, 0.9995, 2000):
        if abs(phi - 0.25) < 1e-9 or abs(phi - 0.75) < 1e-9:
            continue
        for b in Branch:
            assert exists(b, phi) == (abs(x_pm(b, phi)) < 1)


def test_bound_state_invariants():
    for phi in phi_grid(99):
        for b in Branch:
            if not exists(b, phi):
                with pytest.raises(DomainError):
                    bound_state(b, phi)
                continue
            s = bound_state(b, phi)
            assert abs(abs(s.lam) - 1) < 1e-12
            assert abs(s.x) < 1
            assert s.c_norm == pytest.approx(math.sqrt((1 + s.x) / 2), abs=0)
            assert char_poly_residual(s.lam, s.x) < 1e-12


def test_constructor_rejects_nonnormalizable():
    with pytest.raises(DomainError):
        BoundState(MINUS, 0.25, lambda_pm(MINUS, 0.25), -1.0, 0.0)


class TestAmplitudes:
    def test_node0(self):
        for b in Branch:
            s = bound_state(b, 0.5)
            a = amplitude_at(s, 0)
            assert a.alpha == s.c_norm
            assert a.beta == -b.sign * 1j * s.c_norm

    def test_first_site_at_half(self):
        s = bound_state(PLUS, 0.5)
        assert s.c_norm == pytest.approx(math.sqrt(0.4), abs=1e-15)
        assert amplitude_at(s, 1).alpha == pytest.approx(math.sqrt(0.4) * -0.2, abs=1e-15)

    @pytest.mark.parametrize("phi, branch", [(0.1, PLUS), (0.4, MINUS), (0.9, MINUS)])
    def test_decay_ratio(self, phi, branch):
        s = bound_state(branch, phi)
        for n in range(1, 15):
            r = abs(amplitude_at(s, n + 1).alpha / amplitude_at(s, n).alpha)
            assert r == pytest.approx(abs(s.x), rel=1e-12)
            r = abs(amplitude_at(s, -n - 1).beta / amplitude_at(s, -n).beta)
            assert r == pytest.approx(abs(s.x), rel=1e-12)


class TestMaterialize:
    def test_norm_window_60(self):
        s = materialize(bound_state(PLUS, 0.5), 60)
        assert abs(s.norm() ** 2 - 1) < 1e-12

    def test_even_sites_only(self):
        s = materialize(bound_state(MINUS, 0.6), 10)
        assert all(n % 2 == 0 for n in s.support())
        assert min(s.support()) == -20 and max(s.support()) == 20

    def test_tolerance_error(self):
        with pytest.raises(ToleranceError):
            materialize(bound_state(PLUS, 0.5), 1, tol=1e-12)

    @pytest.mark.parametrize("phi, branch", [(0.255, MINUS), (0.5, PLUS), (0.74, PLUS)])
    def test_norm_deficit_is_tail(self, phi, branch):
        b = bound_state(branch, phi)
        for w in (1, 5, 20):
            deficit = 1 - materialize(b, w).norm() ** 2
            assert deficit == pytest.approx(abs(b.x) ** (2 * w + 1), rel=1e-9, abs=1e-15)
            assert deficit <= 2 * abs(b.x) ** (2 * w)

    def test_orthonormal_pairs(self):
        for phi in phi_grid(199):
            if exists(PLUS, phi) and exists(MINUS, phi):
                p = materialize(bound_state(PLUS, phi), 200).vector(-400, 400)
                m = materialize(bound_state(MINUS, phi), 200).vector(-400, 400)
                assert abs(np.vdot(p, m)) < 1e-10


def _direct_overlap(branch, phi, coin):
    phi_state = materialize(bound_state(branch, phi), 200).vector(-400, 400)
    psi = initial_state(*coin).vector(-400, 400)
    return abs(np.vdot(phi_state, psi)) ** 2


class TestOverlap:
    def test_coin_zero_at_half(self):
        assert overlap_F(PLUS, 0.5, 1, 0) == pytest.approx(0.4, abs=1e-15)
        assert overlap_F(MINUS, 0.5, 1, 0) == pytest.approx(0.4, abs=1e-15)
        assert total_overlap(0.5, 1, 0).total == pytest.approx(0.8, abs=1e-15)
        assert _direct_overlap(PLUS, 0.5, (1, 0)) == pytest.approx(0.4, abs=1e-12)

    def test_null_state_of_plus_branch(self):
        # psi0+ = (|0> + i|1>)/sqrt2 is the plus branch's null coin state
        for phi in (0.1, 1 / 6, 0.5, 0.7):
            assert overlap_F(PLUS, phi, *PSI0_PLUS) == 0.0
            assert overlap_F(PLUS, phi, *PSI0_MINUS) > 0.1

    @pytest.mark.parametrize("phi", [0.1, 0.3, 0.5, 0.65, 0.9])
    def test_basis_completeness(self, phi):
        for b in Branch:
            if not exists(b, phi):
                continue
            x = x_pm(b, phi)
            for e1, e2 in [((1, 0), (0, 1)), (PSI0_PLUS, PSI0_MINUS), ((0.6, 0.8j), (0.8j, 0.6))]:
                assert overlap_F(b, phi, *e1) + overlap_F(b, phi, *e2) == pytest.approx(1 + x, abs=1e-14)

    def test_nonexistent_branch_is_zero(self):
        assert overlap_F(MINUS, 1 / 6, 1, 0) == 0.0
        r = total_overlap(1 / 6, 1, 0)
        assert not r.exists_minus and r.exists_plus

    def test_total_at_one_sixth(self):
        assert total_overlap(1 / 6, *PSI0_PLUS).total == 0.0
        r = total_overlap(1 / 6, 1, 0)
        assert r.total == pytest.approx((1 + x_pm(PLUS, 1 / 6)) / 2, abs=1e-15)
        assert r.total == pytest.approx(0.366, abs=1e-3)

    def test_rejects_unnormalized(self):
        with pytest.raises(NormalizationError):
            overlap_F(PLUS, 0.3, 1, 1)

    @pytest.mark.parametrize("coin", [(1, 0), (0, 1), PSI0_PLUS, PSI0_MINUS, (0.6, 0.8j)])
    @pytest.mark.parametrize("phi", [0.1, 1 / 6, 0.5, 0.7, 0.85])
    def test_matches_direct_inner_product(self, phi, coin):
        for b in Branch:
            if exists(b, phi):
                assert abs(overlap_F(b, phi, *coin) - _direct_overlap(b, phi, coin)) < 1e-12

    def test_report_total_bounds(self):
        for phi in phi_grid(99):
            for coin in [(1, 0), PSI0_PLUS, PSI0_MINUS, (0.6, 0.8j)]:
                r = total_overlap(phi, *coin)
                assert 0 <= r.total <= 1
                assert r.total == pytest.approx(
                    (r.f_plus if r.exists_plus else 0) + (r.f_minus if r.exists_minus else 0)
                )


def test_branch_parse():
    assert Branch.parse("plus") is PLUS and Branch.parse("-") is MINUS
    assert str(PLUS) == "plus"
