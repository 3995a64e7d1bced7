#!/usr/bin/env python3
"""
Power-series (Cauchy-Kovalevski) solver for the bidirectional model

The solution is sought as f = sum_l lam^(l+1) f^(l). Order 0 solves the linear
mode equation with data (f0/lam, f1/lam); order l >= 1 solves the same linear
equation with zero data, forced by the quadratic interaction of all pairs of
lower orders (j, l-1-j). Every mode evolves independently once its forcing is
known, so each order is computed on a time mesh with a Duhamel integral.

Alongside the coefficients a majorant ledger is kept: the weighted Wiener
norms B_l(t) that the analytic existence argument bounds by Catalan numbers.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from errors import ConfigError, DomainError, UsageError
from models import ModelKind, ModelParams, WaveState, dispersion_rates
from spectral_core import SpectralField
from timestepper import StepControl, integrate, make_rhs, make_sup_norm

logger = logging.getLogger(__name__)

MAX_ORDER = 20
MAX_CATALAN_INDEX = 30
MIN_MESH = 64
MAX_MESH = 2048
REFINE_TOL = 1e-9
SUPPORT_TOL = 1e-12


class OrderSnapshot(NamedTuple):
    """Coefficients of one series order at one time, on the integer modes `modes`"""

    modes: np.ndarray
    f_hat: np.ndarray
    f_t_hat: np.ndarray
    scale: float = 1.0  # wavenumber per integer mode, 2pi/period


class OrderTrace(NamedTuple):
    """One series order on the whole time mesh; arrays have shape (n_times, n_modes)"""

    f_hat: np.ndarray
    f_t_hat: np.ndarray

    def at(self, i: int, modes: np.ndarray, scale: float) -> OrderSnapshot:
        return OrderSnapshot(modes, self.f_hat[i], self.f_t_hat[i], scale)


@dataclass
class SeriesSolution:
    lam: float
    times: np.ndarray
    modes: np.ndarray
    scale: float
    band_limit: int
    radius: int
    constant: float
    orders: List[OrderTrace] = field(default_factory=list)
    majorants: Optional[pd.DataFrame] = None

    @property
    def max_order(self) -> int:
        return len(self.orders) - 1


# ---------------------------------------------------------------------------
# Constants of the majorant argument
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _catalan(ell: int) -> int:
    if ell == 0:
        return 1
    return sum(_catalan(j) * _catalan(ell - 1 - j) for j in range(ell))


def catalan(ell: int) -> int:
    """Catalan number by the convolution recursion C_l = sum_j C_j C_(l-1-j)"""
    if ell < 0 or ell > MAX_CATALAN_INDEX:
        raise DomainError(f"catalan index must be in [0, {MAX_CATALAN_INDEX}], got {ell}")
    return _catalan(int(ell))


def commutator_symbol(k, m):
    """|k||k-m| - k(k-m); zero whenever k and k-m have the same sign"""
    k = np.asarray(k, dtype=float)
    m = np.asarray(m, dtype=float)
    return np.abs(k) * np.abs(k - m) - k * (k - m)


def admissible_radius(band_limit: int) -> int:
    """Smallest integer R > D with D(R+1)/(1+R^2) <= 1"""
    if band_limit < 0:
        raise DomainError(f"band limit must be >= 0, got {band_limit}")
    r = band_limit + 1
    while band_limit * (r + 1) > 1 + r * r:
        r += 1
    return r


def analytic_constant(alpha_o: float, beta: float, epsilon: float = 1.0) -> float:
    """C(alpha_o, beta) = 2 max(C1, C2) with every symbol bound instantiated"""
    c1 = max(1.0, 2.0, 4.0 * alpha_o, 12.0 * beta)
    c2 = 2.0 * (1.0 + 2.0 * alpha_o + 6.0 * alpha_o) * max(1.0, 2.0 * alpha_o, 6.0 * beta)
    # the bilinear terms carry a factor epsilon
    return 2.0 * max(c1, c2) * max(1.0, epsilon)


def _mode_table(f: SpectralField) -> Tuple[np.ndarray, np.ndarray]:
    """Integer modes and coefficients of a field, sorted by mode"""
    order = np.argsort(f.grid.index)
    return f.grid.index[order], f.coefficients[order]


def _data_band_limit(f0: SpectralField, f1: SpectralField) -> int:
    return max(f0.support_radius(SUPPORT_TOL), f1.support_radius(SUPPORT_TOL))


def series_scaling(f0: SpectralField, f1: SpectralField, params: ModelParams) -> float:
    """The series parameter lam, chosen so that the order-0 majorant B_0 is at most 1"""
    if not f0.grid.same_as(f1.grid):
        raise UsageError("f0 and f1 must share one grid")
    modes, c0 = _mode_table(f0)
    _, c1 = _mode_table(f1)
    k = modes * (2 * np.pi / f0.grid.period)
    nonzero = modes != 0
    rp, rm = dispersion_rates(k[nonzero], params)
    gap = (rp - rm) / 2
    bound = np.sum(np.abs(c0[nonzero]) * (1 + gap) + np.abs(c1[nonzero]) * (1 + 1 / np.sqrt(np.abs(k[nonzero]))))
    bound += np.abs(c0[~nonzero]).sum() + 2 * np.abs(c1[~nonzero]).sum()
    const = analytic_constant(params.alpha_o, params.beta, params.epsilon)
    return float(math.e**2 * const * bound)


def existence_time(f0: SpectralField, f1: SpectralField, params: ModelParams) -> float:
    """Guaranteed existence time T* < 1/(4 e lam); +inf for zero data"""
    lam = series_scaling(f0, f1, params)
    if lam == 0.0:
        return math.inf
    t_star = float(np.nextafter(1.0 / (4 * math.e * lam), 0.0))
    if abs(f1.mean) > 0.0:
        # the zero mode of f grows linearly; its bound only holds up to t = 1
        t_star = min(t_star, 1.0)
    return t_star


# ---------------------------------------------------------------------------
# Mode-by-mode evolution
# ---------------------------------------------------------------------------

def ck_order0(f0_hat, f1_hat, k, t, params: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
    """Closed-form solution of f'' = -(|k| + beta|k|^3) f + i alpha_o k|k| f' with data (f0_hat, f1_hat)

    Broadcasts over k and t; k = 0 evolves as f0_hat + t f1_hat.
    """
    k = np.asarray(k, dtype=float)
    t = np.asarray(t, dtype=float)
    f0_hat = np.asarray(f0_hat, dtype=complex)
    f1_hat = np.asarray(f1_hat, dtype=complex)
    rp, rm = dispersion_rates(k, params)
    gap = rp - rm
    zero = gap == 0
    gap = np.where(zero, 1.0, gap)
    a = f1_hat - 1j * rm * f0_hat
    b = f1_hat - 1j * rp * f0_hat
    ep = np.exp(1j * rp * t)
    em = np.exp(1j * rm * t)
    f = (a * ep - b * em) / (1j * gap)
    f_t = (a * rp * ep - b * rm * em) / gap
    f = np.where(zero, f0_hat + t * f1_hat, f)
    f_t = np.where(zero, f1_hat + 0 * t, f_t)
    return f, f_t


def _forcing_symbols(modes: np.ndarray, scale: float, params: ModelParams):
    """Index and symbol tables for F(k) = sum_m sym(k, m) a(m) b(k - m) on a mode ladder"""
    p = len(modes)
    half = (p - 1) // 2
    k = modes[:, None] * scale
    m = modes[None, :] * scale
    shift = np.arange(p)[:, None] - np.arange(p)[None, :] + half
    valid = (shift >= 0) & (shift < p)
    shift = np.clip(shift, 0, p - 1)

    sym = commutator_symbol(k, m)
    velocity = np.abs(k) * np.sign(m) * np.sign(k - m)
    position = sym.astype(complex)
    mixed = np.zeros_like(position)
    if params.model == ModelKind.BIDIRECTIONAL_FULL:
        position = position + params.beta * (k - m) ** 2 * sym
        mixed = -1j * params.alpha_o * (k - m) * sym
    eps = params.epsilon
    return shift, valid, eps * velocity * valid, eps * position * valid, eps * mixed * valid


def _check_series_model(params: ModelParams) -> None:
    if not params.model.is_bidirectional:
        raise UsageError(f"the series solver needs a bidirectional model, got {params.model.value}")


def ck_forcing(orders: Sequence[OrderSnapshot], ell: int, k: int, t: float, params: ModelParams) -> complex:
    """Forcing of mode k at order ell from the lower orders sampled at time t

    Direct sum over the integer modes m of the four interaction terms:
    velocity-velocity |k| sgn(m) sgn(k-m), position-position via the commutator
    symbol (plus its beta (k-m)^2 variant), and the alpha_o mixed term.
    """
    _check_series_model(params)
    if ell < 1:
        raise UsageError(f"forcing is defined for orders >= 1, got {ell}")
    if len(orders) < ell:
        raise UsageError(f"order {ell} needs {ell} lower orders at t={t}, got {len(orders)}")
    eps, alpha, beta = params.epsilon, params.alpha_o, params.beta
    full = params.model == ModelKind.BIDIRECTIONAL_FULL
    total = 0j
    for j in range(ell):
        a, b = orders[j], orders[ell - 1 - j]
        kk = k * a.scale
        b_f = dict(zip(b.modes.tolist(), b.f_hat))
        b_ft = dict(zip(b.modes.tolist(), b.f_t_hat))
        for m, af, aft in zip(a.modes.tolist(), a.f_hat, a.f_t_hat):
            rest = k - m
            if rest not in b_f:
                continue
            mm, rr = m * a.scale, rest * a.scale
            sym = abs(kk) * abs(rr) - kk * rr
            term = abs(kk) * np.sign(mm) * np.sign(rr) * aft * b_ft[rest] + sym * af * b_f[rest]
            if full:
                term += beta * rr**2 * sym * af * b_f[rest] - 1j * alpha * rr * sym * af * b_ft[rest]
            total += term
    return eps * total


def _forcing_on_mesh(lower: Sequence[OrderTrace], ell: int, tables) -> np.ndarray:
    shift, _, velocity, position, mixed = tables
    total = 0
    for j in range(ell):
        a, b = lower[j], lower[ell - 1 - j]
        b_f = b.f_hat[:, shift]
        b_ft = b.f_t_hat[:, shift]
        total = total + np.einsum("pq,tq,tpq->tp", velocity, a.f_t_hat, b_ft)
        total = total + np.einsum("pq,tq,tpq->tp", position, a.f_hat, b_f)
        total = total + np.einsum("pq,tq,tpq->tp", mixed, a.f_hat, b_ft)
    return total


def ck_duhamel(forcing, times, k, params: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
    """Zero-data response to a forcing sampled on `times` (trapezoid rule)

    forcing has shape (n_times,) or (n_times, n_modes) matching k; the returned
    pair has the same shape and holds the response at every mesh time.
    """
    forcing = np.asarray(forcing, dtype=complex)
    times = np.asarray(times, dtype=float)
    k = np.asarray(k, dtype=float)
    if forcing.shape[0] != times.shape[0]:
        raise UsageError(f"forcing has {forcing.shape[0]} samples for {times.shape[0]} mesh times")
    tt = times.reshape((-1,) + (1,) * (forcing.ndim - 1))
    rp, rm = dispersion_rates(k, params)
    gap = rp - rm
    zero = gap == 0
    gap = np.where(zero, 1.0, gap)

    ip = cumulative_trapezoid(forcing * np.exp(-1j * rp * tt), times, axis=0, initial=0)
    im = cumulative_trapezoid(forcing * np.exp(-1j * rm * tt), times, axis=0, initial=0)
    ep = np.exp(1j * rp * tt)
    em = np.exp(1j * rm * tt)
    f = (ep * ip - em * im) / (1j * gap)
    f_t = (rp * ep * ip - rm * em * im) / gap

    if np.any(zero):
        total = cumulative_trapezoid(forcing, times, axis=0, initial=0)
        moment = cumulative_trapezoid(forcing * tt, times, axis=0, initial=0)
        f = np.where(zero, tt * total - moment, f)
        f_t = np.where(zero, total, f_t)
    return f, f_t


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def _solve_orders(c0, c1, modes, scale, times, max_order, params) -> List[OrderTrace]:
    k = modes * scale
    f, f_t = ck_order0(c0[None, :], c1[None, :], k[None, :], times[:, None], params)
    orders = [OrderTrace(f, f_t)]
    if max_order == 0:
        return orders
    tables = _forcing_symbols(modes, scale, params)
    for ell in range(1, max_order + 1):
        forcing = _forcing_on_mesh(orders, ell, tables)
        orders.append(OrderTrace(*ck_duhamel(forcing, times, k, params)))
    return orders


def _sum_at_end(orders: Sequence[OrderTrace], lam: float) -> Tuple[np.ndarray, np.ndarray]:
    f = sum(lam ** (ell + 1) * o.f_hat[-1] for ell, o in enumerate(orders))
    f_t = sum(lam ** (ell + 1) * o.f_t_hat[-1] for ell, o in enumerate(orders))
    return f, f_t


def majorant_ledger(solution: SeriesSolution) -> pd.DataFrame:
    """Per-order majorants B_l(t) next to their Catalan bounds C_l t^l

    B_l = e^2 C exp(-(l+1) D (R+1) / (1 + l R^2)) (||f^(l)||_A_tau + ||f_t^(l)||_A_tau)
    with tau = R + 1 - l, clamped at 0 for orders beyond R + 1.
    """
    d, r, const = solution.band_limit, solution.radius, solution.constant
    absk = np.abs(solution.modes).astype(float)
    frames = []
    for ell, trace in enumerate(solution.orders):
        tau = max(r + 1 - ell, 0)
        weight = np.exp(tau * absk)
        wiener = (np.abs(trace.f_hat) + np.abs(trace.f_t_hat)) @ weight
        decay = math.exp(-(ell + 1) * d * (r + 1) / (1 + ell * r * r))
        majorant = math.e**2 * const * decay * wiener
        bound = catalan(ell) * solution.times**ell
        frames.append(pd.DataFrame({
            "order": ell,
            "t": solution.times,
            "wiener": wiener,
            "majorant": majorant,
            "catalan_bound": bound,
        }))
    ledger = pd.concat(frames, ignore_index=True)
    ledger["within_bound"] = ledger["majorant"] <= ledger["catalan_bound"] * (1 + 1e-12)
    return ledger


def ck_assemble(
    f0: SpectralField,
    f1: SpectralField,
    t: float,
    max_order: int,
    params: ModelParams,
    band_limit: Optional[int] = None,
    mesh_points: Optional[int] = None,
) -> Tuple[WaveState, SeriesSolution]:
    """Truncated series sum_{l <= max_order} lam^(l+1) (f^(l), f_t^(l)) at time t

    The time mesh is doubled from MIN_MESH until the assembled state changes by
    less than REFINE_TOL (relative) or MAX_MESH is reached; pass mesh_points to
    use one fixed mesh instead.
    """
    _check_series_model(params)
    if not f0.grid.same_as(f1.grid):
        raise UsageError("f0 and f1 must share one grid")
    if max_order < 0 or max_order > MAX_ORDER:
        raise ConfigError(f"max_order must be in [0, {MAX_ORDER}], got {max_order}", field="max_order")
    if t < 0:
        raise UsageError(f"series time must be >= 0, got {t}")

    grid = f0.grid
    support = _data_band_limit(f0, f1)
    if band_limit is None:
        band_limit = max(support, 1)
    elif support > band_limit:
        raise DomainError(f"initial data has modes up to |k|={support}, above the band limit {band_limit}")

    lam = series_scaling(f0, f1, params)
    if lam == 0.0:
        lam = 1.0
    scale = 2 * np.pi / grid.period
    ladder = (max_order + 1) * band_limit
    modes = np.arange(-ladder, ladder + 1)

    all_modes, c0 = _mode_table(f0)
    _, c1 = _mode_table(f1)
    keep = np.abs(all_modes) <= band_limit
    d0 = np.zeros(len(modes), dtype=complex)
    d1 = np.zeros(len(modes), dtype=complex)
    d0[all_modes[keep] + ladder] = c0[keep] / lam
    d1[all_modes[keep] + ladder] = c1[keep] / lam

    if max_order == 0 or t == 0:
        n_mesh = 1
    else:
        n_mesh = mesh_points or MIN_MESH
    times = np.linspace(0.0, t, n_mesh + 1)
    orders = _solve_orders(d0, d1, modes, scale, times, max_order, params)
    f_end, ft_end = _sum_at_end(orders, lam)

    if n_mesh > 1 and mesh_points is None:
        while n_mesh < MAX_MESH:
            n_mesh *= 2
            times = np.linspace(0.0, t, n_mesh + 1)
            orders = _solve_orders(d0, d1, modes, scale, times, max_order, params)
            f_new, ft_new = _sum_at_end(orders, lam)
            peak = max(np.max(np.abs(f_new)), np.max(np.abs(ft_new)), 1e-300)
            change = max(np.max(np.abs(f_new - f_end)), np.max(np.abs(ft_new - ft_end))) / peak
            f_end, ft_end = f_new, ft_new
            logger.debug("series mesh %d: relative change %.3e", n_mesh, change)
            if change < REFINE_TOL:
                break

    solution = SeriesSolution(
        lam=lam,
        times=times,
        modes=modes,
        scale=scale,
        band_limit=band_limit,
        radius=admissible_radius(band_limit),
        constant=analytic_constant(params.alpha_o, params.beta, params.epsilon),
        orders=orders,
    )
    solution.majorants = majorant_ledger(solution)

    on_grid = np.abs(modes) < grid.n_points // 2
    if not np.all(on_grid):
        dropped = np.max(np.abs(f_end[~on_grid]) + np.abs(ft_end[~on_grid]))
        logger.warning(
            "series support |k| <= %d exceeds the grid band; dropped modes peak at %.3e", ladder, dropped
        )
    cf = np.zeros(grid.n_points, dtype=complex)
    cft = np.zeros(grid.n_points, dtype=complex)
    idx = modes[on_grid] % grid.n_points
    cf[idx] = f_end[on_grid]
    cft[idx] = ft_end[on_grid]
    state = WaveState(SpectralField(grid, cf), SpectralField(grid, cft))
    return state, solution


def ck_compare(
    f0: SpectralField,
    f1: SpectralField,
    params: ModelParams,
    orders: Sequence[int],
    fraction: float = 0.05,
    ctrl: Optional[StepControl] = None,
) -> pd.DataFrame:
    """Truncated series against an adaptive Runge-Kutta solve at t = fraction * T*"""
    _check_series_model(params)
    if fraction <= 0:
        raise ConfigError(f"fraction must be > 0, got {fraction}", field="fraction")
    t_star = existence_time(f0, f1, params)
    t = fraction * (t_star if math.isfinite(t_star) else 1.0)
    ctrl = ctrl or StepControl(rel_tol=1e-11, abs_tol=1e-14, initial_dt=min(1e-3, t / 4))
    grid = f0.grid
    reference = integrate(make_rhs(params, grid), WaveState(f0, f1).pack(), (0.0, t), ctrl, norm=make_sup_norm(grid))
    ref = WaveState.unpack(grid, reference.y)
    logger.info("reference solve to t=%.4g: %d steps", t, len(reference.steps))

    rows = []
    for L in orders:
        state, solution = ck_assemble(f0, f1, t, L, params)
        rows.append({
            "max_order": L,
            "t": t,
            "t_star": t_star,
            "lam": solution.lam,
            "mesh_points": len(solution.times) - 1,
            "max_error_f": float(np.max(np.abs(state.f.values - ref.f.values))),
            "max_error_f_t": float(np.max(np.abs(state.f_t.values - ref.f_t.values))),
            "majorants_ok": bool(solution.majorants["within_bound"].all()),
        })
    return pd.DataFrame(rows)
