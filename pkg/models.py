#!/usr/bin/env python3
"""
Right-hand sides of the odd-viscosity surface-wave models

Bidirectional (second order in time, unknown f and f_t):
    full     f_tt = -L f - beta L^3 f + alpha_o L f_tx
                    + eps d_x[ -H((H f_t)^2) + [H, f] L f ]
                    + eps d_x[ -alpha_o [H, f] L d_x f_t + beta [H, f] L^3 f ]
    reduced  same without the eps*alpha_o and eps*beta commutators

Unidirectional (first order in time, far-field variables):
    f-form   (2 + alpha_o L) f_t = (1/eps){f_x + H f + (alpha_o - beta) H f_xx}
                                   + H((L f)^2) - [H, f] L f + (alpha_o - beta)[H, f] L^3 f
                                   + mu f_xx
    u-form   the same equation for u = L f

L is the fractional Laplacian (symbol |k|) and H the Hilbert transform (symbol -i sgn k).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import UsageError
from spectral_core import (
    FourierGrid,
    SpectralField,
    apply_multiplier,
    commutator_h,
    deriv,
    hilbert,
    inverse_helmholtz,
    inverse_lambda,
    lambda_pow,
    product,
)

logger = logging.getLogger(__name__)


class ModelKind(str, Enum):
    BIDIRECTIONAL_FULL = "bidirectional_full"
    BIDIRECTIONAL_REDUCED = "bidirectional_reduced"
    UNIDIRECTIONAL_F = "unidirectional_f"
    UNIDIRECTIONAL_U = "unidirectional_u"

    @property
    def is_bidirectional(self) -> bool:
        return self in (ModelKind.BIDIRECTIONAL_FULL, ModelKind.BIDIRECTIONAL_REDUCED)


class ModelParams(BaseModel):
    """Dimensionless parameters plus the model selector"""

    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(default=1.0, ge=0.0, description="steepness")
    alpha_o: float = Field(default=1.0, ge=0.0, description="odd Reynolds number")
    beta: float = Field(default=1.0, ge=0.0, description="Bond number")
    mu: float = Field(default=0.0, ge=0.0, description="artificial viscosity")
    model: ModelKind = ModelKind.UNIDIRECTIONAL_U

    @model_validator(mode="after")
    def check_model_constraints(self) -> "ModelParams":
        if not self.model.is_bidirectional and self.epsilon <= 0:
            raise ValueError("epsilon must be > 0 for unidirectional models")
        if self.model.is_bidirectional and self.mu != 0:
            raise ValueError("mu is only used by unidirectional models and must be 0 here")
        return self


@dataclass(frozen=True, eq=False)
class WaveState:
    """Bidirectional state (f, f_t) on one grid"""

    f: SpectralField
    f_t: SpectralField

    def __post_init__(self):
        if not self.f.grid.same_as(self.f_t.grid):
            raise UsageError("f and f_t must share one grid")

    @property
    def grid(self) -> FourierGrid:
        return self.f.grid

    def pack(self) -> np.ndarray:
        return np.concatenate([self.f.coefficients, self.f_t.coefficients])

    @classmethod
    def unpack(cls, grid: FourierGrid, y: np.ndarray) -> "WaveState":
        n = grid.n_points
        if y.shape != (2 * n,):
            raise UsageError(f"packed state must have length {2 * n}, got {y.shape}")
        return cls(SpectralField(grid, y[:n]), SpectralField(grid, y[n:]))

    @classmethod
    def zeros(cls, grid: FourierGrid) -> "WaveState":
        return cls(SpectralField.zeros(grid), SpectralField.zeros(grid))


def dispersion_rates(k: Union[float, np.ndarray], params: ModelParams) -> Tuple:
    """Characteristic frequencies r+ >= r- of the linear bidirectional mode equation"""
    a = params.alpha_o
    ak = np.abs(k)
    disc = np.sqrt(a**2 * ak**4 + 4 * (ak + params.beta * ak**3))
    r_plus = (a * k * ak + disc) / 2
    r_minus = (a * k * ak - disc) / 2
    return r_plus, r_minus


def _bidirectional_linear(state: WaveState, params: ModelParams) -> SpectralField:
    k = state.grid.wavenumbers
    ak = np.abs(k)
    on_f = apply_multiplier(state.f, -(ak + params.beta * ak**3))
    on_ft = apply_multiplier(state.f_t, params.alpha_o * ak * 1j * k)
    return on_f + on_ft


def _bidirectional_core(state: WaveState) -> SpectralField:
    """-H((H f_t)^2) + [H, f] L f"""
    h_ft = hilbert(state.f_t)
    return -hilbert(product(h_ft, h_ft)) + commutator_h(state.f, lambda_pow(state.f, 1))


def rhs_bidirectional_full(state: WaveState, params: ModelParams) -> SpectralField:
    acc = _bidirectional_linear(state, params)
    if params.epsilon == 0:
        return acc
    f = state.f
    inner = _bidirectional_core(state)
    if params.alpha_o:
        inner = inner - params.alpha_o * commutator_h(f, lambda_pow(deriv(state.f_t, 1), 1))
    if params.beta:
        inner = inner + params.beta * commutator_h(f, lambda_pow(f, 3))
    return acc + params.epsilon * deriv(inner, 1)


def rhs_bidirectional_reduced(state: WaveState, params: ModelParams) -> SpectralField:
    acc = _bidirectional_linear(state, params)
    if params.epsilon == 0:
        return acc
    return acc + params.epsilon * deriv(_bidirectional_core(state), 1)


def _unidirectional_linear_symbol(grid: FourierGrid, params: ModelParams) -> np.ndarray:
    """(1/eps){d_x + H + (alpha_o - beta) H d_xx} + mu d_xx, before the resolvent"""
    k = grid.wavenumbers
    sgn = np.sign(k)
    bracket = 1j * (k - sgn + (params.alpha_o - params.beta) * sgn * k**2)
    return bracket / params.epsilon - params.mu * k**2


def rhs_unidirectional_f(f: SpectralField, params: ModelParams) -> SpectralField:
    if params.epsilon <= 0:
        raise UsageError("unidirectional models need epsilon > 0")
    rhs = apply_multiplier(f, _unidirectional_linear_symbol(f.grid, params))
    lf = lambda_pow(f, 1)
    rhs = rhs + hilbert(product(lf, lf)) - commutator_h(f, lf)
    gap = params.alpha_o - params.beta
    if gap:
        rhs = rhs + gap * commutator_h(f, lambda_pow(f, 3))
    return inverse_helmholtz(rhs, 2.0, params.alpha_o)


def rhs_unidirectional_u(u: SpectralField, params: ModelParams) -> SpectralField:
    """u-form; f is rebuilt as inverse_lambda(u), so u must be mean-zero"""
    if params.epsilon <= 0:
        raise UsageError("unidirectional models need epsilon > 0")
    f = inverse_lambda(u)
    rhs = apply_multiplier(u, _unidirectional_linear_symbol(u.grid, params))
    rhs = rhs - deriv(product(u, u), 1) - lambda_pow(commutator_h(f, u), 1)
    gap = params.alpha_o - params.beta
    if gap:
        rhs = rhs + gap * lambda_pow(commutator_h(f, lambda_pow(u, 2)), 1)
    return inverse_helmholtz(rhs, 2.0, params.alpha_o)


def linear_part(x: Union[SpectralField, WaveState], params: ModelParams) -> SpectralField:
    """Linearization at zero of the selected model's right-hand side"""
    if params.model.is_bidirectional:
        if not isinstance(x, WaveState):
            raise UsageError("bidirectional models act on a WaveState")
        return _bidirectional_linear(x, params)
    if isinstance(x, WaveState):
        raise UsageError("unidirectional models act on a single field")
    return inverse_helmholtz(
        apply_multiplier(x, _unidirectional_linear_symbol(x.grid, params)), 2.0, params.alpha_o
    )


def acceleration(state: WaveState, params: ModelParams) -> SpectralField:
    """f_tt for the selected bidirectional model"""
    if params.model == ModelKind.BIDIRECTIONAL_FULL:
        return rhs_bidirectional_full(state, params)
    if params.model == ModelKind.BIDIRECTIONAL_REDUCED:
        return rhs_bidirectional_reduced(state, params)
    raise UsageError(f"{params.model.value} is not a bidirectional model")


def evolution_rate(field: SpectralField, params: ModelParams) -> SpectralField:
    """Time derivative for the selected unidirectional model"""
    if params.model == ModelKind.UNIDIRECTIONAL_F:
        return rhs_unidirectional_f(field, params)
    if params.model == ModelKind.UNIDIRECTIONAL_U:
        return rhs_unidirectional_u(field, params)
    raise UsageError(f"{params.model.value} is not a unidirectional model")
