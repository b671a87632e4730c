"""Diagonal Fourier multipliers: fractional Helmholtz filter and deconvolution.

With x(k) = α^{2θ}|k|^{2θ}:

    a_hat(k) = 1 + x                      (fractional Helmholtz operator A_θ)
    r(k)     = x / (1 + x)                (symbol of I - A_θ^{-1})
    d_hat(k) = a_hat (1 - r^{N+1})        (van Cittert D_{N,θ} = Σ_{i≤N} (I - A_θ^{-1})^i)

The filter is A_θ^{-1}.  θ = 0 or α = 0 switch the filter off (a_hat ≡ 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .spectral import SpectralVectorField, WaveGrid, _k_power

THEORY_THETA_MIN = 1.0 / 6.0

MODEL_MODES = ("radm", "limit_atheta", "plain_rotational_nse")


@dataclass(frozen=True)
class FilterParams:
    """Filter length α, fractional exponent θ and deconvolution order N.

    α = 0 or θ = 0 switches the filter off (Â = D̂ = 1).
    """

    alpha: float
    theta: float
    deconv_order: int

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if int(self.deconv_order) != self.deconv_order or self.deconv_order < 0:
            raise ValueError(f"deconvolution order must be a nonnegative integer, got {self.deconv_order}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "deconv_order", int(self.deconv_order))

    @property
    def theory_regime(self) -> bool:
        """True when θ >= 1/6, the range covered by the well-posedness theory."""
        return self.theta >= THEORY_THETA_MIN

    @property
    def filter_off(self) -> bool:
        return self.alpha == 0.0 or self.theta == 0.0


@dataclass(frozen=True, eq=False)
class SymbolTable:
    """Per-mode symbols for one (grid, params) pair.  Arrays are read-only."""

    grid: WaveGrid
    params: FilterParams
    k_pow: np.ndarray   # |k|^{2θ}
    a_hat: np.ndarray
    d_hat: np.ndarray
    r: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        """a_hat - d_hat, as computed."""
        return self.a_hat - self.d_hat


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def symbol_arrays(k_squared: np.ndarray, params: FilterParams):
    """(|k|^{2θ}, a_hat, d_hat, r) for an array of integer |k|² values."""
    ksq = np.asarray(k_squared, dtype=float)
    k_pow = np.zeros_like(ksq)
    nz = ksq > 0
    if params.theta == 0.0:
        k_pow[nz] = 1.0
    else:
        k_pow[nz] = np.exp(params.theta * np.log(ksq[nz]))
    if params.filter_off:
        x = np.zeros_like(ksq)
    else:
        x = params.alpha ** (2.0 * params.theta) * k_pow
    a_hat = 1.0 + x
    r = x / a_hat
    if params.deconv_order == 0:
        d_hat = np.ones_like(ksq)
    else:
        d_hat = a_hat * (1.0 - r ** (params.deconv_order + 1))
    return k_pow, a_hat, d_hat, r


@lru_cache(maxsize=64)
def symbols(grid: WaveGrid, params: FilterParams) -> SymbolTable:
    k_pow, a_hat, d_hat, r = symbol_arrays(grid.k_squared, params)
    return SymbolTable(grid, params, _frozen(k_pow), _frozen(a_hat), _frozen(d_hat), _frozen(r))


class ModelSymbols(NamedTuple):
    """Multipliers defining one model variant.

    advect: symbol of the advecting-velocity operator (D_N, A_θ or I)
    outer: symbol of the outer filter (1/a_hat or 1)
    energy_sq: weight of |c_k|² in the model energy (a_hat·advect or 1)
    """

    advect: np.ndarray
    outer: np.ndarray
    energy_sq: np.ndarray


@lru_cache(maxsize=64)
def model_symbols(grid: WaveGrid, params: FilterParams, mode: str = "radm") -> ModelSymbols:
    if mode not in MODEL_MODES:
        raise ValueError(f"unknown model mode {mode!r}")
    if mode == "plain_rotational_nse":
        one = _frozen(np.ones(grid.shape))
        return ModelSymbols(one, one, one)
    tab = symbols(grid, params)
    advect = tab.d_hat if mode == "radm" else tab.a_hat
    outer = _frozen(1.0 / tab.a_hat)
    return ModelSymbols(advect, outer, _frozen(tab.a_hat * advect))


def _scaled(v: SpectralVectorField, mult: np.ndarray) -> SpectralVectorField:
    return SpectralVectorField(v.grid, v.coeffs * mult)


def helmholtz_apply(v: SpectralVectorField, p: FilterParams) -> SpectralVectorField:
    """A_θ v: multiply each mode by 1 + α^{2θ}|k|^{2θ}."""
    return _scaled(v, symbols(v.grid, p).a_hat)


def filter_apply(v: SpectralVectorField, p: FilterParams) -> SpectralVectorField:
    """The filtered field A_θ^{-1} v."""
    return SpectralVectorField(v.grid, v.coeffs / symbols(v.grid, p).a_hat)


def deconv_apply(v: SpectralVectorField, p: FilterParams) -> SpectralVectorField:
    """D_{N,θ} v via the closed-form symbol."""
    return _scaled(v, symbols(v.grid, p).d_hat)


def model_energy_multiplier(v: SpectralVectorField, p: FilterParams) -> SpectralVectorField:
    """A_θ^{1/2} D_{N,θ}^{1/2} v."""
    tab = symbols(v.grid, p)
    return _scaled(v, np.sqrt(tab.a_hat * tab.d_hat))


def leray_project(v: SpectralVectorField) -> SpectralVectorField:
    return SpectralVectorField(v.grid, leray_coeffs(v.grid, v.coeffs))


def leray_coeffs(grid, c: np.ndarray) -> np.ndarray:
    """c_k - k (k·c_k)/|k|² on raw arrays (full grid or HalfSpectrum)."""
    k1, k2, k3 = grid.k
    kdotc = (k1 * c[0] + k2 * c[1] + k3 * c[2]) * grid.k_squared_inv
    out = np.empty_like(c)
    out[0] = c[0] - k1 * kdotc
    out[1] = c[1] - k2 * kdotc
    out[2] = c[2] - k3 * kdotc
    return out


def fractional_laplacian(v: SpectralVectorField, theta: float) -> SpectralVectorField:
    """(-Δ)^θ v: multiply by |k|^{2θ}; the zero mode maps to zero."""
    return _scaled(v, _k_power(v.grid, theta))


def norm_equivalence_constant(grid: WaveGrid, p: FilterParams, modes: np.ndarray | None = None) -> float:
    """sup_{k≠0} |k|^θ / sqrt(a_hat d_hat) over ``modes`` (default: every mode).

    Bounds ||v||_{s+θ,2} by C ||A^{1/2} D^{1/2} v||_{s,2}.
    """
    tab = symbols(grid, p)
    sel = grid.k_squared > 0
    if modes is not None:
        sel &= modes
    ratio = np.sqrt(tab.k_pow[sel]) / np.sqrt(tab.a_hat[sel] * tab.d_hat[sel])
    return float(ratio.max())
