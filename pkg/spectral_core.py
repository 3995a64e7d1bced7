#!/usr/bin/env python3
"""
Periodic Fourier representation of real fields and the Fourier-multiplier
operators (Hilbert transform, fractional Laplacian, derivatives, resolvents,
commutators) used by the surface-wave models.

Coefficient convention: f(x) = sum_k c_k exp(i k x 2pi/period), with the
collocation points x_j = -period/2 + j*period/n.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from errors import ConfigError, DomainError, UsageError

# Setup logging
logger = logging.getLogger(__name__)

MIN_POINTS = 8
HERMITIAN_TOL = 1e-13
MEAN_TOL = 1e-12


class FourierGrid(BaseModel):
    """Uniform periodic collocation grid with its integer wavenumber ladder"""

    model_config = ConfigDict(frozen=True)

    n_points: int
    period: float = Field(default=2 * np.pi, gt=0.0)

    @field_validator("n_points")
    @classmethod
    def validate_power_of_two(cls, v: int) -> int:
        if v < MIN_POINTS or v & (v - 1):
            raise ValueError(f"n_points must be a power of two >= {MIN_POINTS}, got {v}")
        return v

    @cached_property
    def index(self) -> np.ndarray:
        """Integer mode numbers in FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1"""
        return np.rint(np.fft.fftfreq(self.n_points, d=1.0 / self.n_points)).astype(np.int64)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return self.index * (2 * np.pi / self.period)

    @cached_property
    def points(self) -> np.ndarray:
        return -self.period / 2 + np.arange(self.n_points) * self.period / self.n_points

    @cached_property
    def nyquist_keep(self) -> np.ndarray:
        keep = np.ones(self.n_points)
        keep[self.n_points // 2] = 0.0
        return keep

    @cached_property
    def dealias_keep(self) -> np.ndarray:
        return (np.abs(self.index) <= self.n_points // 3).astype(float) * self.nyquist_keep

    @cached_property
    def mirror(self) -> np.ndarray:
        """Position of -k for every position of k"""
        return (-np.arange(self.n_points)) % self.n_points

    @cached_property
    def phase(self) -> np.ndarray:
        # samples start at -period/2, so the raw FFT carries a factor (-1)^k
        return np.where(self.index % 2 == 0, 1.0, -1.0)

    @property
    def band_limit(self) -> int:
        """Largest mode kept by the 2/3 rule"""
        return self.n_points // 3

    @property
    def spacing(self) -> float:
        return self.period / self.n_points

    def same_as(self, other: "FourierGrid") -> bool:
        return self.n_points == other.n_points and self.period == other.period


def make_grid(n_points: int, period: float = 2 * np.pi) -> FourierGrid:
    """Build a validated grid; invalid sizes raise ConfigError"""
    try:
        return FourierGrid(n_points=n_points, period=period)
    except ValidationError as e:
        err = e.errors()[0]
        field = ".".join(str(p) for p in err["loc"])
        raise ConfigError(err["msg"], field=field) from None


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A real periodic field held as its Hermitian-symmetric Fourier coefficients"""

    grid: FourierGrid
    coefficients: np.ndarray

    @classmethod
    def from_physical(cls, grid: FourierGrid, values: np.ndarray) -> "SpectralField":
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_points,):
            raise UsageError(f"expected {grid.n_points} samples, got shape {values.shape}")
        return cls(grid, np.fft.fft(values) / grid.n_points * grid.phase)

    @classmethod
    def zeros(cls, grid: FourierGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.n_points, dtype=complex))

    @classmethod
    def from_terms(cls, grid: FourierGrid, terms: Iterable[Tuple[str, int, float]]) -> "SpectralField":
        """Sum of amplitude * sin/cos(wavenumber * 2pi x / period) terms"""
        c = np.zeros(grid.n_points, dtype=complex)
        for kind, wavenumber, amplitude in terms:
            m = int(wavenumber)
            if abs(m) >= grid.n_points // 2:
                raise ConfigError(
                    f"wavenumber {m} is outside the grid band (n_points={grid.n_points})",
                    field="initial_data.wavenumber",
                )
            if kind == "cosine":
                if m == 0:
                    c[0] += amplitude
                else:
                    c[abs(m)] += amplitude / 2
                    c[-abs(m)] += amplitude / 2
            elif kind == "sine":
                if m == 0:
                    continue
                a = amplitude * np.sign(m)
                c[abs(m)] += a / 2j
                c[-abs(m)] -= a / 2j
            else:
                raise ConfigError(f"unknown term kind '{kind}'", field="initial_data.kind")
        return cls(grid, c)

    @property
    def values(self) -> np.ndarray:
        return np.real(np.fft.ifft(self.coefficients * self.grid.phase) * self.grid.n_points)

    @property
    def mean(self) -> float:
        return float(np.real(self.coefficients[0]))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_real(self, tol: float = HERMITIAN_TOL) -> bool:
        c = self.coefficients
        scale = np.max(np.abs(c))
        if scale == 0.0:
            return True
        return bool(np.max(np.abs(c - np.conj(c[self.grid.mirror]))) <= tol * scale)

    def support_radius(self, tol: float = 1e-12) -> int:
        """Largest |k| carrying a coefficient above tol relative to the peak"""
        mags = np.abs(self.coefficients)
        peak = np.max(mags)
        if peak == 0.0:
            return 0
        return int(np.max(np.abs(self.grid.index[mags > tol * peak])))

    def with_coefficients(self, coefficients: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coefficients)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coefficients + other.coefficients)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coefficients - other.coefficients)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coefficients)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coefficients * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coefficients / scalar)


def _check_same_grid(f: SpectralField, g: SpectralField) -> None:
    if not f.grid.same_as(g.grid):
        raise UsageError(
            f"grid mismatch: ({f.grid.n_points}, {f.grid.period}) vs ({g.grid.n_points}, {g.grid.period})"
        )


def apply_multiplier(f: SpectralField, symbol: np.ndarray) -> SpectralField:
    """Multiply coefficients by a symbol; the Nyquist mode is always zeroed"""
    return SpectralField(f.grid, f.coefficients * symbol * f.grid.nyquist_keep)


def hilbert(f: SpectralField) -> SpectralField:
    return apply_multiplier(f, -1j * np.sign(f.grid.wavenumbers))


def lambda_pow(f: SpectralField, s: float) -> SpectralField:
    """Fractional Laplacian power: c_k -> |k|^s c_k"""
    if s < 0:
        raise DomainError(f"lambda_pow needs s >= 0 (got {s}); use inverse_lambda")
    return apply_multiplier(f, np.abs(f.grid.wavenumbers) ** s)


def deriv(f: SpectralField, n: int = 1) -> SpectralField:
    if n < 1:
        raise UsageError(f"derivative order must be >= 1, got {n}")
    return apply_multiplier(f, (1j * f.grid.wavenumbers) ** n)


def inverse_helmholtz(f: SpectralField, a: float, b: float) -> SpectralField:
    """Resolvent (a + b*Lambda)^-1"""
    if a <= 0:
        raise ConfigError(f"resolvent needs a > 0, got {a}", field="a")
    if b < 0:
        raise ConfigError(f"resolvent needs b >= 0, got {b}", field="b")
    return apply_multiplier(f, 1.0 / (a + b * np.abs(f.grid.wavenumbers)))


def inverse_lambda(f: SpectralField) -> SpectralField:
    c = f.coefficients
    peak = np.max(np.abs(c))
    if peak > 0 and abs(c[0]) >= MEAN_TOL * peak:
        raise DomainError(f"Lambda is not invertible on a field with mean {f.mean:.3e}")
    k = np.abs(f.grid.wavenumbers)
    symbol = np.zeros_like(k)
    symbol[k > 0] = 1.0 / k[k > 0]
    return apply_multiplier(f, symbol)


def dealias(f: SpectralField) -> SpectralField:
    """2/3 rule: zero every mode with |k| > n/3 (and the Nyquist mode)"""
    return SpectralField(f.grid, f.coefficients * f.grid.dealias_keep)


def product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Dealiased collocation product of two fields"""
    _check_same_grid(f, g)
    fg = dealias(f).values * dealias(g).values
    return dealias(SpectralField.from_physical(f.grid, fg))


def commutator_h(f: SpectralField, g: SpectralField) -> SpectralField:
    """[H, f] g = H(f g) - f H(g)"""
    _check_same_grid(f, g)
    return hilbert(product(f, g)) - product(f, hilbert(g))


def random_field(
    grid: FourierGrid,
    n_modes: int,
    amplitude: float = 1.0,
    seed: int = 0,
    mean_zero: bool = True,
    rng: Optional[np.random.Generator] = None,
) -> SpectralField:
    """Band-limited random real field on modes 1..n_modes"""
    if n_modes < 1 or n_modes > grid.band_limit:
        raise ConfigError(
            f"n_modes must be in [1, {grid.band_limit}] for n_points={grid.n_points}, got {n_modes}",
            field="n_modes",
        )
    rng = rng or np.random.default_rng(seed)
    c = np.zeros(grid.n_points, dtype=complex)
    mags = rng.uniform(0.1, 1.0, n_modes) * amplitude / 2
    phases = rng.uniform(0.0, 2 * np.pi, n_modes)
    c[1:n_modes + 1] = mags * np.exp(1j * phases)
    c[-n_modes:] = np.conj(c[1:n_modes + 1][::-1])
    if not mean_zero:
        c[0] = rng.uniform(-1.0, 1.0) * amplitude
    return SpectralField(grid, c)
