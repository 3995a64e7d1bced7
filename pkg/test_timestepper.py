"""
Tests for the adaptive Dormand-Prince integrator and the first-order lift.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ck_series import ck_order0
from errors import BlowUpError, IntegrationFailure, UsageError
from models import ModelKind, ModelParams, WaveState, dispersion_rates, rhs_bidirectional_full
from spectral_core import SpectralField, make_grid, random_field
from timestepper import StepControl, integrate, lift_second_order, make_rhs, make_sup_norm

LINEAR_FULL = ModelParams(epsilon=0.0, model=ModelKind.BIDIRECTIONAL_FULL)


def decay(t, y):
    return -y


def sine_state(grid, k=1):
    return WaveState(SpectralField.from_terms(grid, [("sine", k, 1.0)]), SpectralField.zeros(grid))


class TestIntegrate:
    def test_exponential_decay(self):
        result = integrate(decay, np.array([1.0]), (0.0, 1.0), StepControl(rel_tol=1e-10, abs_tol=1e-12))
        assert result.t == 1.0
        assert result.y[0] == pytest.approx(math.exp(-1.0), abs=1e-8)
        assert result.n_rhs >= 6 * len(result.steps)

    def test_nan_signals_blow_up_at_start(self):
        with pytest.raises(BlowUpError) as info:
            integrate(lambda t, y: np.full_like(y, np.nan), np.ones(3), (0.0, 1.0))
        assert info.value.time == 0.0
        assert info.value.reason == "blow-up"

    def test_ceiling_signals_blow_up(self):
        with pytest.raises(BlowUpError) as info:
            integrate(lambda t, y: y, np.array([1.0]), (0.0, 5.0), StepControl(blowup_ceiling=10.0))
        assert math.log(10.0) - 0.2 < info.value.time < math.log(10.0) + 0.2
        assert abs(info.value.state[0]) > 10.0

    def test_ceiling_uses_field_sup_norm(self):
        grid = make_grid(16)
        y0 = SpectralField.from_terms(grid, [("cosine", 1, 1.0)]).coefficients
        assert np.max(np.abs(y0)) == pytest.approx(0.5)
        with pytest.raises(BlowUpError) as info:
            integrate(lambda t, y: np.zeros_like(y), y0, (0.0, 1.0), StepControl(blowup_ceiling=0.9), norm=make_sup_norm(grid))
        assert info.value.time > 0.0

    def test_sup_norm_covers_both_fields(self):
        grid = make_grid(16)
        state = WaveState(SpectralField.zeros(grid), SpectralField.from_terms(grid, [("sine", 2, 3.0)]))
        assert make_sup_norm(grid)(state.pack()) == pytest.approx(3.0, rel=1e-12)

    def test_ceiling_from_environment(self, monkeypatch):
        monkeypatch.setenv("ODDWAVES_BLOWUP_CEILING", "5")
        assert StepControl().blowup_ceiling == 5.0

    def test_step_limit(self):
        ctrl = StepControl(max_dt=0.01, initial_dt=0.01, max_steps=3)
        with pytest.raises(IntegrationFailure) as info:
            integrate(decay, np.array([1.0]), (0.0, 1.0), ctrl)
        assert not isinstance(info.value, BlowUpError)
        assert info.value.reason == "step-limit"
        assert info.value.time == pytest.approx(0.03, abs=1e-3)
        assert info.value.state is not None

    def test_empty_span_rejected(self):
        with pytest.raises(UsageError):
            integrate(decay, np.array([1.0]), (1.0, 1.0))

    def test_observer_times(self):
        seen = []
        integrate(decay, np.array([1.0]), (0.0, 2.0), StepControl(max_dt=0.3), observer=lambda t, y: seen.append(t))
        assert len(seen) >= 7
        assert all(b > a for a, b in zip(seen, seen[1:]))
        assert seen[-1] == 2.0

    def test_backward_direction(self):
        result = integrate(decay, np.array([math.exp(-1.0)]), (1.0, 0.0), StepControl(rel_tol=1e-10, abs_tol=1e-12))
        assert result.t == 0.0
        assert result.y[0] == pytest.approx(1.0, abs=1e-8)
        assert all(s.dt < 0 for s in result.steps)


class TestLinearBidirectional:
    def test_single_mode_follows_closed_form(self):
        grid = make_grid(16)
        state = sine_state(grid)
        ctrl = StepControl(rel_tol=1e-10, abs_tol=1e-13)
        result = integrate(make_rhs(LINEAR_FULL, grid), state.pack(), (0.0, 2.0), ctrl)
        expected, _ = ck_order0(state.f.coefficients[1], 0.0, 1.0, 2.0, LINEAR_FULL)
        assert abs(result.y[1] - expected) < 1e-8

    @pytest.mark.parametrize("k", [1, 2, 5])
    @pytest.mark.parametrize("alpha_o,beta", [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
    def test_dispersion_rates_reproduced(self, k, alpha_o, beta):
        # data -r sin kx, cos kx excites only the e^{i r t} branch of mode k
        grid = make_grid(16)
        params = ModelParams(epsilon=0.0, alpha_o=alpha_o, beta=beta, model=ModelKind.BIDIRECTIONAL_FULL)
        rates = dispersion_rates(float(k), params)
        ctrl = StepControl(rel_tol=1e-10, abs_tol=1e-14)
        for rate in rates:
            f0 = SpectralField.from_terms(grid, [("cosine", k, 1.0)])
            f1 = SpectralField.from_terms(grid, [("sine", k, -rate)])
            dt = 1.0 / abs(rate)
            result = integrate(make_rhs(params, grid), WaveState(f0, f1).pack(), (0.0, dt), ctrl)
            fitted = np.angle(result.y[k] / f0.coefficients[k]) / dt
            assert fitted == pytest.approx(rate, rel=1e-6)
            assert abs(result.y[k]) == pytest.approx(0.5, rel=1e-6)

    def test_time_reversal(self):
        grid = make_grid(16)
        state = WaveState(random_field(grid, 3, seed=1), random_field(grid, 3, seed=2))
        rhs = make_rhs(LINEAR_FULL, grid)
        ctrl = StepControl(rel_tol=1e-10, abs_tol=1e-13)
        forward = integrate(rhs, state.pack(), (0.0, 1.0), ctrl)
        back = integrate(rhs, forward.y, (1.0, 0.0), ctrl)
        assert_allclose(back.y, state.pack(), atol=1e-6)

    def test_tightening_tolerance_reduces_error(self):
        grid = make_grid(16)
        state = sine_state(grid)
        rhs = make_rhs(LINEAR_FULL, grid)
        expected, _ = ck_order0(state.f.coefficients[1], 0.0, 1.0, 5.0, LINEAR_FULL)
        errors = []
        for tol in (1e-5, 2.5e-6):
            ctrl = StepControl(rel_tol=tol, abs_tol=1e-14, max_dt=10.0)
            result = integrate(rhs, state.pack(), (0.0, 5.0), ctrl)
            errors.append(abs(result.y[1] - expected))
        assert errors[1] * 2 <= errors[0]


class TestLift:
    def test_unidirectional_rejected(self, grid64):
        with pytest.raises(UsageError):
            lift_second_order(ModelParams(), grid64)

    def test_zero_state(self, grid64):
        rhs = lift_second_order(ModelParams(model=ModelKind.BIDIRECTIONAL_FULL), grid64)
        assert np.all(rhs(0.0, WaveState.zeros(grid64).pack()) == 0)

    def test_linear_sine(self, grid64):
        params = ModelParams(epsilon=0.0, beta=2.0, model=ModelKind.BIDIRECTIONAL_REDUCED)
        out = WaveState.unpack(grid64, lift_second_order(params, grid64)(0.0, sine_state(grid64).pack()))
        assert np.all(out.f.coefficients == 0)
        assert_allclose(out.f_t.values, -3.0 * np.sin(grid64.points), atol=1e-13)

    def test_matches_direct_rhs(self, grid64):
        params = ModelParams(epsilon=0.5, alpha_o=0.7, beta=1.3, model=ModelKind.BIDIRECTIONAL_FULL)
        state = WaveState(random_field(grid64, 6, seed=3), random_field(grid64, 6, seed=4))
        out = WaveState.unpack(grid64, lift_second_order(params, grid64)(0.0, state.pack()))
        assert_allclose(out.f.coefficients, state.f_t.coefficients, atol=0)
        assert_allclose(out.f_t.coefficients, rhs_bidirectional_full(state, params).coefficients, atol=0)
