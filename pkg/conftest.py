"""
Shared fixtures and brute-force Fourier oracles for the test suite
"""

import numpy as np
import pytest

from spectral_core import SpectralField, make_grid, random_field


@pytest.fixture
def grid64():
    return make_grid(64)


@pytest.fixture
def grid256():
    return make_grid(256)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def isolated_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("ODDWAVES_OUTPUT_ROOT", str(tmp_path / "runs"))
    monkeypatch.setenv("ODDWAVES_WORKERS", "1")
    monkeypatch.delenv("ODDWAVES_BLOWUP_CEILING", raising=False)
    monkeypatch.delenv("ODDWAVES_SWEEP_CAP", raising=False)


def mode_dict(f: SpectralField, tol: float = 0.0) -> dict:
    """{integer mode: coefficient} for every coefficient above tol"""
    return {int(m): c for m, c in zip(f.grid.index, f.coefficients) if abs(c) > tol}


def commutator_oracle(f: SpectralField, g: SpectralField) -> SpectralField:
    """[H, f] g by explicit double sum: sum_m f(m) g(k-m) (-i)(sgn k - sgn(k-m)), kept for |k| <= n/3"""
    grid = f.grid
    fm, gm = mode_dict(f), mode_dict(g)
    out = np.zeros(grid.n_points, dtype=complex)
    limit = grid.band_limit
    for m, a in fm.items():
        if abs(m) > limit:
            continue
        for r, b in gm.items():
            k = m + r
            if abs(r) > limit or abs(k) > limit:
                continue
            out[k % grid.n_points] += -1j * (np.sign(k) - np.sign(r)) * a * b
    return SpectralField(grid, out)


def few_mode_corpus(grid, count: int = 12, max_modes: int = 8):
    """Deterministic random fields with 1..max_modes active modes"""
    rng = np.random.default_rng(7)
    return [
        random_field(grid, int(rng.integers(1, max_modes + 1)), amplitude=float(rng.uniform(0.1, 2.0)), rng=rng)
        for _ in range(count)
    ]
