#!/usr/bin/env python3
"""
Adaptive explicit Runge-Kutta integration of the model ODEs in Fourier space

Dormand-Prince 5(4) pair (DOPRI5, seven stages, FSAL) with a PI step-size
controller. Second-order-in-time models are integrated as the first-order
system (f, g)' = (g, f_tt(f, g)) with g = f_t.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from errors import BlowUpError, IntegrationFailure, UsageError
from models import ModelParams, WaveState, acceleration, evolution_rate
from settings import get_settings
from spectral_core import FourierGrid, SpectralField

logger = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]
Observer = Callable[[float, np.ndarray], None]
Norm = Callable[[np.ndarray], float]

# Dormand-Prince tableau (Hairer, Norsett & Wanner, Solving ODEs I, p. 178)
C_NODES = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A_MATRIX = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B_WEIGHTS = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# 5th-order minus embedded 4th-order weights
E_WEIGHTS = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

SAFETY = 0.9
PI_BETA1 = 0.7 / 5
PI_BETA2 = 0.4 / 5
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class StepControl(BaseModel):
    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(default=1e-8, gt=0.0)
    abs_tol: float = Field(default=1e-10, gt=0.0)
    max_dt: float = Field(default=0.1, gt=0.0)
    initial_dt: float = Field(default=1e-3, gt=0.0)
    max_steps: int = Field(default=1_000_000, ge=1)
    blowup_ceiling: float = Field(default_factory=lambda: get_settings().blowup_ceiling, gt=0.0)
    max_rejections: int = Field(default=40, ge=1, description="consecutive non-finite trials before giving up")


class StepRecord(NamedTuple):
    t: float
    dt: float
    error: float


@dataclass
class IntegrationResult:
    t: float
    y: np.ndarray
    steps: List[StepRecord] = field(default_factory=list)
    n_rejected: int = 0
    n_rhs: int = 0


def max_abs(y: np.ndarray) -> float:
    return float(np.max(np.abs(y)))


def make_sup_norm(grid: FourierGrid) -> Norm:
    """Physical sup norm of a packed state: max over its fields of max |f(x_j)|"""

    def sup_norm(y: np.ndarray) -> float:
        blocks = np.reshape(y, (-1, grid.n_points))
        return max(SpectralField(grid, c).sup_norm() for c in blocks)

    return sup_norm


def _error_norm(err: np.ndarray, y: np.ndarray, y_new: np.ndarray, ctrl: StepControl) -> float:
    scale = ctrl.abs_tol + ctrl.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def integrate(
    rhs: Rhs,
    y0: np.ndarray,
    t_span: Tuple[float, float],
    ctrl: Optional[StepControl] = None,
    observer: Optional[Observer] = None,
    norm: Norm = max_abs,
) -> IntegrationResult:
    """Integrate y' = rhs(t, y) from t_span[0] to t_span[1] (either direction)

    Blow-up is signalled when norm(y) exceeds ctrl.blowup_ceiling after an
    accepted step. Packed Fourier states should pass make_sup_norm(grid) so the
    ceiling applies to field values, not to single coefficients.
    """
    ctrl = ctrl or StepControl()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 == t0:
        raise UsageError("t_span must have t1 != t0")
    direction = 1.0 if t1 > t0 else -1.0

    n_calls = 0

    def f(t, y):
        nonlocal n_calls
        n_calls += 1
        return rhs(t, y)

    t = t0
    y = np.array(y0, copy=True)
    result = IntegrationResult(t=t, y=y)
    h = min(ctrl.initial_dt, ctrl.max_dt, abs(t1 - t0))
    k1 = f(t, y)
    if not np.all(np.isfinite(k1)):
        raise BlowUpError("non-finite right-hand side", t, y)

    err_prev = 1e-4
    rejected_in_row = 0
    min_h = 1e-14 * max(1.0, abs(t0), abs(t1))

    while direction * (t1 - t) > 0:
        if len(result.steps) >= ctrl.max_steps:
            raise IntegrationFailure(f"max_steps={ctrl.max_steps} exceeded", t, y)

        remaining = abs(t1 - t)
        last = h >= remaining * (1 - 1e-12)
        if last:
            h = remaining
        dt = direction * h

        stages = [k1]
        for i in range(1, 7):
            yi = y + dt * sum(a * stages[j] for j, a in enumerate(A_MATRIX[i]) if a != 0.0)
            stages.append(f(t + C_NODES[i] * dt, yi))
        # FSAL: stage 7 is evaluated at the new solution
        y_new = yi
        err_vec = dt * sum(e * s for e, s in zip(E_WEIGHTS, stages) if e != 0.0)

        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(stages[-1])) and np.all(np.isfinite(err_vec))):
            result.n_rejected += 1
            rejected_in_row += 1
            logger.debug("non-finite trial step at t=%.6g, dt=%.3e", t, dt)
            if rejected_in_row > ctrl.max_rejections:
                raise BlowUpError("state became non-finite", t, y)
            h *= 0.25
            continue

        err = _error_norm(err_vec, y, y_new, ctrl)
        if err <= 1.0:
            t = t1 if last else t + dt
            y = y_new
            k1 = stages[-1]
            result.steps.append(StepRecord(t, dt, err))
            rejected_in_row = 0
            if norm(y) > ctrl.blowup_ceiling:
                raise BlowUpError(f"state exceeded ceiling {ctrl.blowup_ceiling:.3g}", t, y)
            if observer is not None:
                observer(t, y)
            err_c = max(err, 1e-10)
            factor = SAFETY * err_c ** (-PI_BETA1) * err_prev ** PI_BETA2
            err_prev = max(err, 1e-4)
        else:
            result.n_rejected += 1
            logger.debug("rejected step at t=%.6g, dt=%.3e, err=%.3e", t, dt, err)
            factor = max(MIN_FACTOR, SAFETY * err ** (-1 / 5))
        h = min(ctrl.max_dt, h * min(MAX_FACTOR, max(MIN_FACTOR, factor)))
        if h < min_h and direction * (t1 - t) > 0:
            raise IntegrationFailure(f"step size underflow (dt={h:.3e})", t, y)

    result.t = t
    result.y = y
    result.n_rhs = n_calls
    logger.debug(
        "integrated to t=%.6g in %d steps (%d rejected, %d rhs calls)",
        t, len(result.steps), result.n_rejected, n_calls,
    )
    return result


def lift_second_order(params: ModelParams, grid: FourierGrid) -> Rhs:
    """First-order rhs (f, g)' = (g, f_tt(f, g)) on packed coefficient vectors"""
    if not params.model.is_bidirectional:
        raise UsageError(f"{params.model.value} is first order in time; use make_rhs")

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        state = WaveState.unpack(grid, y)
        acc = acceleration(state, params)
        return np.concatenate([state.f_t.coefficients * grid.nyquist_keep, acc.coefficients])

    return rhs


def make_rhs(params: ModelParams, grid: FourierGrid) -> Rhs:
    """Packed-vector rhs for any model"""
    if params.model.is_bidirectional:
        return lift_second_order(params, grid)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return evolution_rate(SpectralField(grid, y), params).coefficients

    return rhs
