#!/usr/bin/env python3
"""
Norms, energies and identity residuals monitored along a run.

Norms use the coefficient convention of spectral_core: ||f||_L2^2 = sum_k |c_k|^2
(the mean square of f), so every integral over the period is normalized by it.
"""

import logging
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from errors import DomainError, UsageError
from models import ModelKind, ModelParams, WaveState
from spectral_core import (
    SpectralField,
    commutator_h,
    deriv,
    hilbert,
    inverse_lambda,
    lambda_pow,
    product,
)

logger = logging.getLogger(__name__)

MAX_DERIVATIVE = 4
DEFAULT_SOBOLEV_ORDERS = (1.0, 2.0)
# larger radii overflow e^{tau |k|} on fine grids
DEFAULT_WIENER_RADII = (0.0, 0.1)


def sobolev_norm(f: SpectralField, s: float) -> float:
    """||f||_H^s = sqrt(sum_k (1 + |k|^(2s)) |c_k|^2)"""
    if s < 0:
        raise DomainError(f"Sobolev order must be >= 0, got {s}")
    weight = 1.0 + np.abs(f.grid.wavenumbers) ** (2 * s)
    return float(np.sqrt(np.sum(weight * np.abs(f.coefficients) ** 2)))


def wiener_norm(f: SpectralField, tau: float) -> float:
    """||f||_A_tau = sum_k e^(tau |k|) |c_k|"""
    if tau < 0:
        raise DomainError(f"Wiener radius must be >= 0, got {tau}")
    return float(np.sum(np.exp(tau * np.abs(f.grid.wavenumbers)) * np.abs(f.coefficients)))


def _l2(f: SpectralField) -> float:
    return float(np.sqrt(np.sum(np.abs(f.coefficients) ** 2)))


def energy_teo2(state: WaveState, beta: float) -> float:
    """beta ||f||_H^4.5 + ||f||_H^3.5 + ||f_t||_H^3 (a sum of norms, not squared)"""
    return beta * sobolev_norm(state.f, 4.5) + sobolev_norm(state.f, 3.5) + sobolev_norm(state.f_t, 3.0)


def energy_teo4(f: SpectralField) -> float:
    """||f||^2 + ||L^0.5 f||^2 + ||L f||^2 + ||L^1.5 f||^2"""
    k = np.abs(f.grid.wavenumbers)
    power = np.abs(f.coefficients) ** 2
    return float(sum(np.sum(k ** (2 * s) * power) for s in (0.0, 0.5, 1.0, 1.5)))


def sup_norm_deriv(f: SpectralField, n: int) -> float:
    """max over the collocation points of |d^n f / dx^n|"""
    if n < 0 or n > MAX_DERIVATIVE:
        raise UsageError(f"derivative order must be in [0, {MAX_DERIVATIVE}], got {n}")
    if n == 0:
        return f.sup_norm()
    return deriv(f, n).sup_norm()


def tricomi_residual(f: SpectralField) -> float:
    """sup |(Hf)^2 - f^2 - 2 H(f Hf)| after removing the mean of the residual"""
    hf = hilbert(f)
    residual = product(hf, hf) - product(f, f) - 2 * hilbert(product(f, hf))
    c = residual.coefficients.copy()
    c[0] = 0.0
    return residual.with_coefficients(c).sup_norm()


def period_integral(f: SpectralField, values: np.ndarray) -> float:
    """Trapezoid rule over one period on the collocation points of f's grid (weight period/n)"""
    return float(np.sum(values) * f.grid.spacing)


def cubic_residual(u: SpectralField) -> float:
    """|integral over the period of H((L u)^2) * L^2 u|"""
    lu = lambda_pow(u, 1)
    integrand = hilbert(product(lu, lu)).values * lambda_pow(u, 2).values
    return abs(period_integral(u, integrand))


def commutator_ratio(f: SpectralField, g: SpectralField) -> float:
    """||d_x [H, f] d_x g|| / (||f_xx||_inf ||g||), the constant of the commutator estimate"""
    numerator = _l2(deriv(commutator_h(f, deriv(g, 1)), 1))
    denominator = sup_norm_deriv(f, 2) * _l2(g)
    if denominator == 0.0:
        return 0.0
    return numerator / denominator


def energy_growth_constant(times: Sequence[float], energies: Sequence[float]) -> float:
    """Largest (dE/dt) / E^2 along a sampled energy curve (forward differences)"""
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    if t.shape != e.shape or t.size < 2:
        raise UsageError("need at least two matching (time, energy) samples")
    if np.any(np.diff(t) <= 0):
        raise UsageError("times must be strictly increasing")
    rate = np.diff(e) / np.diff(t)
    base = e[:-1]
    ok = base > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(rate[ok] / base[ok] ** 2))


class DiagnosticsRecord(BaseModel):
    time: float
    sup_u: float
    sup_ux: float
    sup_uxx: float
    sobolev: Dict[float, float] = Field(default_factory=dict)
    wiener: Dict[float, float] = Field(default_factory=dict)
    energy_teo2: Optional[float] = None
    energy_teo4: float
    tricomi_residual: float
    cubic_residual: float
    commutator_ratio: float
    mean: float

    def to_row(self) -> Dict[str, Optional[float]]:
        row = self.model_dump(exclude={"sobolev", "wiener"})
        for s, value in self.sobolev.items():
            row[f"sobolev_H{s:g}"] = value
        for tau, value in self.wiener.items():
            row[f"wiener_A{tau:g}"] = value
        return row

    def is_finite(self) -> bool:
        values = [v for v in self.to_row().values() if v is not None]
        return bool(np.all(np.isfinite(values)))


def observed_fields(x: Union[SpectralField, WaveState], params: ModelParams):
    """(u, f) pair monitored for each model: u is the plotted profile, f its potential"""
    if params.model.is_bidirectional:
        if not isinstance(x, WaveState):
            raise UsageError("bidirectional models are monitored on a WaveState")
        return x.f, x.f
    if isinstance(x, WaveState):
        raise UsageError("unidirectional models are monitored on a single field")
    if params.model == ModelKind.UNIDIRECTIONAL_U:
        return x, inverse_lambda(x)
    return lambda_pow(x, 1), x


def collect_record(
    x: Union[SpectralField, WaveState],
    t: float,
    params: ModelParams,
    sobolev_orders: Iterable[float] = DEFAULT_SOBOLEV_ORDERS,
    wiener_radii: Iterable[float] = DEFAULT_WIENER_RADII,
) -> DiagnosticsRecord:
    u, f = observed_fields(x, params)
    return DiagnosticsRecord(
        time=t,
        sup_u=sup_norm_deriv(u, 0),
        sup_ux=sup_norm_deriv(u, 1),
        sup_uxx=sup_norm_deriv(u, 2),
        sobolev={s: sobolev_norm(u, s) for s in sobolev_orders},
        wiener={tau: wiener_norm(u, tau) for tau in wiener_radii},
        energy_teo2=energy_teo2(x, params.beta) if params.model.is_bidirectional else None,
        energy_teo4=energy_teo4(f),
        tricomi_residual=tricomi_residual(u),
        cubic_residual=cubic_residual(u),
        commutator_ratio=commutator_ratio(f, u),
        mean=u.mean,
    )
