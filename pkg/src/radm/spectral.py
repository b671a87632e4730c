"""Discrete periodic torus, Fourier transforms and Sobolev norms.

Fields live on the cube [0, 2π)³ sampled at n points per axis.  Spectral
coefficients use the series normalization

    c_k = (1/n³) Σ_x f(x) e^{-ik·x},      f(x) = Σ_k c_k e^{ik·x},

so that integer wavenumbers k ∈ Z³ and the coefficient norms coincide with
the continuum Fourier-series definitions.  Coefficient arrays always have
shape ``(3, n, n, n)`` in FFT index order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import MeanFreeError, SymmetryError

BOX_LENGTH = 2.0 * np.pi

__all__ = [
    "WaveGrid",
    "shared_grid",
    "SpectralVectorField",
    "RealVectorField",
    "forward_transform",
    "inverse_transform",
    "sobolev_norm",
    "dealias",
    "inner",
    "divergence_residual",
    "symmetry_violation",
    "expand_half",
    "random_field",
]


@dataclass(frozen=True)
class WaveGrid:
    """Cubic collocation grid with n points per axis on the 2π-torus.

    Wavenumber components run over [-n/2+1, n/2] (FFT order).  The
    Nyquist component is labelled +n/2 for magnitudes but is excluded from
    derivatives, which keeps i·k·c Hermitian on the self-conjugate planes.
    """

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise TypeError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be even and >= 8, got {self.n}")

    @property
    def box_length(self) -> float:
        return BOX_LENGTH

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @cached_property
    def k1d(self) -> np.ndarray:
        """Integer wavenumbers along one axis, Nyquist as +n/2."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        k[self.n // 2] = self.n // 2
        return k

    @cached_property
    def kd1d(self) -> np.ndarray:
        """Derivative wavenumbers along one axis (Nyquist zeroed)."""
        k = self.k1d.copy()
        k[self.n // 2] = 0.0
        return k

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable wavenumber components (k1, k2, k3)."""
        n = self.n
        k = self.k1d
        return (k.reshape(n, 1, 1), k.reshape(1, n, 1), k.reshape(1, 1, n))

    @cached_property
    def kd(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        k = self.kd1d
        return (k.reshape(n, 1, 1), k.reshape(1, n, 1), k.reshape(1, 1, n))

    @cached_property
    def k_squared(self) -> np.ndarray:
        k1, k2, k3 = self.k
        return k1 * k1 + k2 * k2 + k3 * k3

    @cached_property
    def k_squared_inv(self) -> np.ndarray:
        """1/|k|² with the zero mode mapped to 0."""
        ksq = self.k_squared
        out = np.zeros_like(ksq)
        np.divide(1.0, ksq, out=out, where=ksq > 0)
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True where |k_j| <= n/3 on every axis (2/3 rule)."""
        keep = np.abs(self.k1d) <= self.n / 3.0
        return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]

    @cached_property
    def k_max_retained(self) -> float:
        """Largest |k| among dealiased (retained) modes."""
        return float(np.sqrt(self.k_squared[self.dealias_mask].max()))

    @cached_property
    def k_axis_retained(self) -> int:
        return int(np.floor(self.n / 3.0))

    @cached_property
    def points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Collocation coordinates x_j = 2π j / n, broadcastable."""
        n = self.n
        x = BOX_LENGTH * np.arange(n) / n
        return (x.reshape(n, 1, 1), x.reshape(1, n, 1), x.reshape(1, 1, n))

    @cached_property
    def half(self) -> "HalfSpectrum":
        return HalfSpectrum.of(self)

    def mode_index(self, k: tuple[int, int, int]) -> tuple[int, int, int]:
        """Array index of integer wavenumber k."""
        return tuple(int(kj) % self.n for kj in k)

    def zeros(self) -> np.ndarray:
        return np.zeros((3,) + self.shape, dtype=complex)


@lru_cache(maxsize=None)
def shared_grid(n: int) -> WaveGrid:
    """One WaveGrid per size, so cached wavenumber arrays are reused."""
    return WaveGrid(int(n))


@dataclass(frozen=True, eq=False)
class HalfSpectrum:
    """Wavenumber arrays restricted to k3 >= 0 (the rfftn layout).

    ``weight`` counts each stored mode together with its conjugate partner,
    so Σ_full f = Σ_half weight·f for Hermitian quantities.
    """

    n: int
    k: tuple
    kd: tuple
    k_squared: np.ndarray
    k_squared_inv: np.ndarray
    dealias_mask: np.ndarray
    weight: np.ndarray

    @classmethod
    def of(cls, grid: "WaveGrid") -> "HalfSpectrum":
        h = grid.n // 2 + 1
        k1, k2, k3 = grid.k
        d1, d2, d3 = grid.kd
        weight = np.full(h, 2.0)
        weight[0] = weight[-1] = 1.0
        return cls(grid.n, (k1, k2, k3[..., :h]), (d1, d2, d3[..., :h]),
                   grid.k_squared[..., :h], grid.k_squared_inv[..., :h],
                   grid.dealias_mask[..., :h], weight.reshape(1, 1, h))

    def cut(self, a: np.ndarray) -> np.ndarray:
        return a[..., : self.n // 2 + 1]


@dataclass(eq=False)
class SpectralVectorField:
    """Fourier coefficients c_k (complex 3-vectors) of a real velocity field."""

    grid: WaveGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (3,) + self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid n={self.grid.n}"
            )

    @classmethod
    def zeros(cls, grid: WaveGrid) -> "SpectralVectorField":
        return cls(grid, grid.zeros())

    def copy(self) -> "SpectralVectorField":
        return SpectralVectorField(self.grid, self.coeffs.copy())

    def mode(self, k: tuple[int, int, int]) -> np.ndarray:
        return self.coeffs[(slice(None),) + self.grid.mode_index(k)]

    def set_mode(self, k, value) -> None:
        self.coeffs[(slice(None),) + self.grid.mode_index(k)] = value


@dataclass(eq=False)
class RealVectorField:
    """Real 3-vector values at the n³ collocation points."""

    grid: WaveGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (3,) + self.grid.shape:
            raise ValueError(
                f"value shape {self.values.shape} does not match grid n={self.grid.n}"
            )


# -- raw array transforms ----------------------------------------------------

def _reflect(a: np.ndarray) -> np.ndarray:
    """Return b with b[..., k] = a[..., -k] over the last three axes."""
    n = a.shape[-1]
    idx = (-np.arange(n)) % n
    return a[..., idx, :, :][..., :, idx, :][..., :, :, idx]


def to_physical(coeffs: np.ndarray) -> np.ndarray:
    """Inverse transform of Hermitian coefficients, no symmetry check."""
    n = coeffs.shape[-1]
    half = coeffs[..., : n // 2 + 1]
    return sfft.irfftn(half, s=(n, n, n), axes=(-3, -2, -1), norm="forward")


def half_to_physical(half: np.ndarray) -> np.ndarray:
    n = half.shape[-2]
    return sfft.irfftn(half, s=(n, n, n), axes=(-3, -2, -1), norm="forward")


def physical_to_half(values: np.ndarray) -> np.ndarray:
    return sfft.rfftn(values, axes=(-3, -2, -1), norm="forward")


def to_spectral(values: np.ndarray) -> np.ndarray:
    """Forward transform of real values; the result is exactly Hermitian."""
    return expand_half(physical_to_half(values))


def expand_half(half: np.ndarray) -> np.ndarray:
    """Full coefficient array from its k3 >= 0 half, by conjugate symmetry."""
    n = half.shape[-2]
    h = n // 2 + 1
    out = np.empty(half.shape[:-1] + (n,), dtype=complex)
    out[..., :h] = half
    idx = (-np.arange(n)) % n
    tail = half[..., idx, :, :][..., :, idx, :][..., n - np.arange(h, n)]
    out[..., h:] = np.conj(tail)
    # self-conjugate planes (k3 = 0, n/2) are symmetric only to rounding
    # after rfftn; force them exact
    for j in (0, n // 2):
        plane = out[..., j]
        refl = plane[..., idx, :][..., :, idx]
        out[..., j] = 0.5 * (plane + np.conj(refl))
    return out


def symmetry_violation(coeffs: np.ndarray) -> float:
    """max |c_{-k} - conj(c_k)| relative to max |c_k| (0 for the zero field)."""
    scale = float(np.max(np.abs(coeffs))) if coeffs.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(_reflect(coeffs) - np.conj(coeffs)))) / scale


# -- public operations -------------------------------------------------------

def forward_transform(f: RealVectorField) -> SpectralVectorField:
    return SpectralVectorField(f.grid, to_spectral(f.values))


def inverse_transform(v: SpectralVectorField, tol: float = 1e-10) -> RealVectorField:
    """Evaluate the series at the collocation points.

    Raises SymmetryError if the coefficients are not conjugate-symmetric
    to within ``tol`` (relative).
    """
    viol = symmetry_violation(v.coeffs)
    if viol > tol:
        raise SymmetryError(f"conjugate symmetry violated by {viol:.3e} (tol {tol:g})")
    return RealVectorField(v.grid, to_physical(v.coeffs))


@lru_cache(maxsize=32)
def _k_power(grid: WaveGrid, s: float) -> np.ndarray:
    """|k|^{2s} for k != 0, zero at k = 0 (read-only, cached)."""
    ksq = grid.k_squared
    out = np.zeros_like(ksq)
    nz = ksq > 0
    out[nz] = np.exp(s * np.log(ksq[nz]))
    out.setflags(write=False)
    return out


def sobolev_norm(v: SpectralVectorField, s: float, tol: float = 1e-12) -> float:
    """( Σ_{k≠0} |k|^{2s} |c_k|² )^{1/2}.

    The zero mode must vanish (mean-free spaces); a nonzero c_0 raises
    MeanFreeError.
    """
    c0 = np.abs(v.coeffs[:, 0, 0, 0]).max()
    if c0 > tol:
        raise MeanFreeError(f"zero mode carries |c_0| = {c0:.3e}")
    amp = np.sum(np.abs(v.coeffs) ** 2, axis=0)
    if s == 0:
        total = amp.sum() - np.sum(np.abs(v.coeffs[:, 0, 0, 0]) ** 2)
    else:
        total = np.sum(_k_power(v.grid, s) * amp)
    return float(np.sqrt(total))


def dealias(v: SpectralVectorField) -> SpectralVectorField:
    return SpectralVectorField(v.grid, v.coeffs * v.grid.dealias_mask)


def inner(u: SpectralVectorField | np.ndarray, v: SpectralVectorField | np.ndarray) -> float:
    """L² pairing Σ_k Re(conj(u_k)·v_k), i.e. the volume average of u·v."""
    a = u.coeffs if isinstance(u, SpectralVectorField) else u
    b = v.coeffs if isinstance(v, SpectralVectorField) else v
    return float(np.real(np.vdot(a, b)))


def divergence_residual(v: SpectralVectorField) -> float:
    """max_k |k·c_k|."""
    k1, k2, k3 = v.grid.k
    c = v.coeffs
    return float(np.max(np.abs(k1 * c[0] + k2 * c[1] + k3 * c[2])))


def random_field(grid: WaveGrid, rng: np.random.Generator, *, k_peak: float | None = None,
                 mask: bool = True) -> SpectralVectorField:
    """Random Hermitian, mean-free field; smooth spectrum if ``k_peak`` is set."""
    values = rng.standard_normal((3,) + grid.shape)
    c = to_spectral(values)
    if k_peak is not None:
        ksq = grid.k_squared
        c *= ksq * np.exp(-ksq / k_peak**2)
    if mask:
        c *= grid.dealias_mask
    c[:, 0, 0, 0] = 0.0
    return SpectralVectorField(grid, c)
