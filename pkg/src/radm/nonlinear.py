"""Pseudo-spectral rotational nonlinearity  overline{ D w × ∇×(D w) }."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import FilterParams, model_symbols
from .spectral import (
    HalfSpectrum,
    SpectralVectorField,
    WaveGrid,
    half_to_physical,
    physical_to_half,
    to_physical,
    to_spectral,
)

_EPS_GUARD = 1e-300


@dataclass(eq=False)
class NonlinearTerm:
    """Filtered model term plus residual diagnostics.

    pointwise_orth: max_x |(a×ω)·a| / (|a|²|ω|) over collocation points
    dealias_loss: relative L² mass removed by 2/3 truncation (0 if off)
    """

    value: SpectralVectorField
    pointwise_orth: float
    dealias_loss: float


def curl_coeffs(grid: WaveGrid | HalfSpectrum, c: np.ndarray) -> np.ndarray:
    k1, k2, k3 = grid.kd
    out = np.empty_like(c)
    out[0] = 1j * (k2 * c[2] - k3 * c[1])
    out[1] = 1j * (k3 * c[0] - k1 * c[2])
    out[2] = 1j * (k1 * c[1] - k2 * c[0])
    return out


def curl(v: SpectralVectorField) -> SpectralVectorField:
    """∇×v, i.e. i k × c_k per mode."""
    return SpectralVectorField(v.grid, curl_coeffs(v.grid, v.coeffs))


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


def model_term_half(hs: HalfSpectrum, wh: np.ndarray, advect: np.ndarray, outer: np.ndarray,
                    dealias_on: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Solver kernel on k3 >= 0 half spectra (symbols already cut to half).

    Returns (filtered term, advecting velocity in physical space).
    """
    a_hat = wh * advect
    a = half_to_physical(a_hat)
    omega = half_to_physical(curl_coeffs(hs, a_hat))
    t = physical_to_half(_cross(a, omega))
    if dealias_on:
        t *= hs.dealias_mask
    t *= outer
    t[:, 0, 0, 0] = 0.0
    return t, a


def rotational_cross(u: SpectralVectorField, p: FilterParams, dealias_on: bool = True,
                     mode: str = "radm") -> NonlinearTerm:
    """Filtered model nonlinearity for velocity ``u``.

    With mode="radm" the advecting field is D_{N,θ}u; "limit_atheta" uses
    A_θ u and "plain_rotational_nse" uses u with no outer filter.  The
    result is not Leray-projected.
    """
    grid = u.grid
    msym = model_symbols(grid, p, mode)
    a_hat = u.coeffs * msym.advect
    a = to_physical(a_hat)
    omega = to_physical(curl_coeffs(grid, a_hat))
    cross = _cross(a, omega)
    t = to_spectral(cross)
    loss = 0.0
    if dealias_on:
        full = np.sum(np.abs(t) ** 2)
        t *= grid.dealias_mask
        if full > 0:
            loss = float(np.sqrt(max(full - np.sum(np.abs(t) ** 2), 0.0) / full))
    t *= msym.outer
    t[:, 0, 0, 0] = 0.0
    dot = np.abs(np.sum(cross * a, axis=0))
    scale = np.sum(a * a, axis=0) * np.sqrt(np.sum(omega * omega, axis=0))
    orth = float(np.max(dot / (scale + _EPS_GUARD)))
    return NonlinearTerm(SpectralVectorField(grid, t), orth, loss)


def orthogonality_defect(u: SpectralVectorField, term: NonlinearTerm | SpectralVectorField,
                         p: FilterParams, mode: str = "radm") -> float:
    """|<term, A D u>| / (||term||₂ ||A D u||₂ + ε)."""
    t = term.value.coeffs if isinstance(term, NonlinearTerm) else term.coeffs
    partner = u.coeffs * model_symbols(u.grid, p, mode).energy_sq
    num = abs(float(np.real(np.vdot(t, partner))))
    den = float(np.linalg.norm(t)) * float(np.linalg.norm(partner)) + _EPS_GUARD
    return num / den
