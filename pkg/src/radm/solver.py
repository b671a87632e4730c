"""Time integration of the rotational deconvolution model.

    w_t = P[ overline{ D w × ∇×(D w) } + f̄ ] + ν Δw,     ∇·w = 0,

where P is the Leray projector.  The viscous term is integrated exactly by
the factor e^{-ν|k|²t}; the rest uses Williamson's 2N-storage RK3 in the
integrating-factor variable.  ``model_mode`` selects D = D_{N,θ} (radm),
D = A_θ (limit_atheta) or D = I without outer filter (plain_rotational_nse).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import BlowUpError, ConfigError
from .nonlinear import model_term_half
from .operators import MODEL_MODES, FilterParams, leray_coeffs, model_symbols
from .spectral import SpectralVectorField, WaveGrid, expand_half, random_field, shared_grid

FORCING_PRESETS = ("none", "steady_trig", "time_decaying_trig")
IC_PRESETS = ("taylor_green_2d", "random_divfree", "abc_flow")

# Williamson (1980) low-storage RK3
_RK_A = (0.0, -5.0 / 9.0, -153.0 / 128.0)
_RK_B = (1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0)
_RK_C = (0.0, 1.0 / 3.0, 3.0 / 4.0)


@dataclass(frozen=True)
class SolverConfig:
    nu: float = 0.02
    filter: FilterParams = field(default_factory=lambda: FilterParams(0.25, 0.5, 4))
    dt: float = 1e-3
    t_end: float = 0.5
    forcing_preset: str = "none"
    ic_preset: str = "taylor_green_2d"
    ic_seed: int = 7
    cfl_safety: float = 0.5
    model_mode: str = "radm"
    grid_n: int = 32
    dealias_on: bool = True
    # test hook: drop the nonlinear term entirely
    nonlinear_on: bool = True
    forcing_amplitude: float = 0.5
    custom_forcing: Optional[Callable[[WaveGrid, float], np.ndarray]] = None

    def __post_init__(self):
        if not (self.nu >= 0 and math.isfinite(self.nu)):
            raise ConfigError(f"nu must be >= 0, got {self.nu}", key="nu")
        if self.nu == 0 and (self.forcing_preset != "none" or self.custom_forcing is not None):
            raise ConfigError("nu = 0 is only allowed without forcing", key="nu")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}", key="dt")
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}", key="t_end")
        if not 0 < self.cfl_safety <= 1:
            raise ConfigError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}", key="cfl_safety")
        if self.forcing_preset not in FORCING_PRESETS:
            raise ConfigError(f"unknown forcing preset {self.forcing_preset!r}", key="forcing")
        if self.ic_preset not in IC_PRESETS:
            raise ConfigError(f"unknown initial condition {self.ic_preset!r}", key="ic")
        if self.model_mode not in MODEL_MODES:
            raise ConfigError(f"unknown model mode {self.model_mode!r}", key="model_mode")
        try:
            WaveGrid(self.grid_n)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), key="grid_n") from None

    @property
    def grid(self) -> WaveGrid:
        return shared_grid(self.grid_n)

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass(eq=False)
class SolverState:
    t: float
    w: SpectralVectorField
    step_count: int = 0
    last_diag: object = None
    warnings: list = field(default_factory=list)


@dataclass(eq=False)
class PressureField:
    grid: WaveGrid
    q_coeffs: np.ndarray


# -- initial data and forcing --------------------------------------------------

def _add_trig(c: np.ndarray, grid: WaveGrid, comp: int, k, kind: str, amp: float) -> None:
    """Add amp·cos(k·x) or amp·sin(k·x) to component ``comp``."""
    plus = grid.mode_index(k)
    minus = grid.mode_index(tuple(-kj for kj in k))
    if kind == "cos":
        c[(comp,) + plus] += amp / 2
        c[(comp,) + minus] += amp / 2
    else:
        c[(comp,) + plus] += -0.5j * amp
        c[(comp,) + minus] += 0.5j * amp


def taylor_green_coeffs(grid: WaveGrid) -> np.ndarray:
    """(sin x₁ cos x₂, -cos x₁ sin x₂, 0), built mode by mode."""
    c = grid.zeros()
    # sin x cos y = ½ sin(x+y) + ½ sin(x-y);  -cos x sin y = -½ sin(x+y) + ½ sin(x-y)
    _add_trig(c, grid, 0, (1, 1, 0), "sin", 0.5)
    _add_trig(c, grid, 0, (1, -1, 0), "sin", 0.5)
    _add_trig(c, grid, 1, (1, 1, 0), "sin", -0.5)
    _add_trig(c, grid, 1, (1, -1, 0), "sin", 0.5)
    return c


def abc_coeffs(grid: WaveGrid, A: float = 1.0, B: float = 1.0, C: float = 1.0) -> np.ndarray:
    """Arnold-Beltrami-Childress flow; ∇×v = v."""
    c = grid.zeros()
    _add_trig(c, grid, 0, (0, 0, 1), "sin", A)
    _add_trig(c, grid, 0, (0, 1, 0), "cos", C)
    _add_trig(c, grid, 1, (1, 0, 0), "sin", B)
    _add_trig(c, grid, 1, (0, 0, 1), "cos", A)
    _add_trig(c, grid, 2, (0, 1, 0), "sin", C)
    _add_trig(c, grid, 2, (1, 0, 0), "cos", B)
    return c


def random_divfree_coeffs(grid: WaveGrid, seed: int, k_peak: float = 3.0) -> np.ndarray:
    """Smooth random solenoidal field normalised to ||v||₂ = 1."""
    rng = np.random.default_rng(seed)
    c = leray_coeffs(grid, random_field(grid, rng, k_peak=k_peak).coeffs)
    return c / np.linalg.norm(c)


def initial_velocity(cfg: SolverConfig) -> SpectralVectorField:
    """Unfiltered initial velocity v₀ (projected, mean-free)."""
    grid = cfg.grid
    if cfg.ic_preset == "taylor_green_2d":
        c = taylor_green_coeffs(grid)
    elif cfg.ic_preset == "abc_flow":
        c = abc_coeffs(grid)
    else:
        c = random_divfree_coeffs(grid, cfg.ic_seed)
    if np.any(c[:, ~grid.dealias_mask] != 0):
        raise ConfigError(f"initial condition {cfg.ic_preset!r} is not resolved on n={grid.n}", key="ic")
    c = leray_coeffs(grid, c)
    c[:, 0, 0, 0] = 0.0
    return SpectralVectorField(grid, c)


def forcing_coeffs(cfg: SolverConfig, t: float) -> np.ndarray | None:
    """Unfiltered forcing f(t), or None when unforced."""
    grid = cfg.grid
    if cfg.custom_forcing is not None:
        return np.asarray(cfg.custom_forcing(grid, t), dtype=complex)
    if cfg.forcing_preset == "none":
        return None
    base = _steady_forcing(grid, cfg.forcing_amplitude)
    if cfg.forcing_preset == "time_decaying_trig":
        return base * math.exp(-t)
    return base


@lru_cache(maxsize=8)
def _steady_forcing(grid: WaveGrid, amp: float) -> np.ndarray:
    # (sin x₂, sin x₃, sin x₁): each component independent of its own coordinate
    c = grid.zeros()
    _add_trig(c, grid, 0, (0, 1, 0), "sin", amp)
    _add_trig(c, grid, 1, (0, 0, 1), "sin", amp)
    _add_trig(c, grid, 2, (1, 0, 0), "sin", amp)
    c.setflags(write=False)
    return c


# -- model evaluation ------------------------------------------------------------

class _Model:
    """Per-config cache of half-spectrum symbols and the last nonlinear evaluation.

    Internally fields are stored on k3 >= 0 (rfftn layout); full coefficient
    arrays are rebuilt once per step.
    """

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.grid = cfg.grid
        self.hs = self.grid.half
        self.msym = model_symbols(self.grid, cfg.filter, cfg.model_mode)
        cut = self.hs.cut
        self.advect = cut(self.msym.advect)
        self.outer = cut(self.msym.outer)
        self._cache_key = None
        self._cache_val = None
        self._forcing_warned = False
        self.warnings: list[str] = []

    def term_half(self, wh: np.ndarray, key=None) -> tuple[np.ndarray, float]:
        """(filtered, dealiased model term on k3 >= 0, max advecting speed).

        ``key`` (an array object) memoises the last evaluation by identity.
        """
        if key is not None and self._cache_key is key:
            return self._cache_val
        t, a = model_term_half(self.hs, wh, self.advect, self.outer, self.cfg.dealias_on)
        amax = float(np.sqrt(np.max(np.sum(a * a, axis=0))))
        if key is not None:
            self._cache_key, self._cache_val = key, (t, amax)
        return t, amax

    def term(self, w: np.ndarray) -> tuple[np.ndarray, float]:
        """Full-grid version of ``term_half`` for a full coefficient array."""
        t, amax = self.term_half(self.hs.cut(w), key=w)
        return expand_half(t), amax

    def filtered_forcing(self, t: float) -> np.ndarray | None:
        f = forcing_coeffs(self.cfg, t)
        if f is None:
            return None
        if self.cfg.custom_forcing is not None:
            fp = leray_coeffs(self.grid, f)
            fp[:, 0, 0, 0] = 0.0
            if not self._forcing_warned and np.max(np.abs(fp - f)) > 1e-12 * max(np.max(np.abs(f)), 1.0):
                msg = "custom forcing was not divergence-free and mean-free; projected"
                warnings.warn(msg, RuntimeWarning, stacklevel=3)
                self.warnings.append(msg)
                self._forcing_warned = True
            f = fp
        return f * self.msym.outer

    def rhs_half(self, wh: np.ndarray, t: float, key=None) -> np.ndarray:
        if self.cfg.nonlinear_on:
            out = self.term_half(wh, key)[0].copy()
        else:
            out = np.zeros_like(wh)
        f = self.filtered_forcing(t)
        if f is not None:
            out += self.hs.cut(f)
        out = leray_coeffs(self.hs, out)
        out[:, 0, 0, 0] = 0.0
        return out

    def rhs(self, w: np.ndarray, t: float) -> np.ndarray:
        return expand_half(self.rhs_half(self.hs.cut(w), t, key=w))


@lru_cache(maxsize=16)
def _model(cfg: SolverConfig) -> _Model:
    return _Model(cfg)


@lru_cache(maxsize=64)
def _decay(grid: WaveGrid, nu: float, h: float):
    """Half-spectrum exp(-ν|k|² c h) and inverses per RK stage, plus the full step."""
    ksq = grid.half.k_squared
    fwd = [np.exp(-nu * ksq * c * h) for c in _RK_C]
    inv = [np.exp(nu * ksq * c * h) for c in _RK_C]
    return fwd, inv, np.exp(-nu * ksq * h)


# -- public operations ------------------------------------------------------------

def initialize(cfg: SolverConfig) -> SolverState:
    """w₀ = A_θ^{-1} v₀ (w₀ = v₀ in plain mode)."""
    model = _model(cfg)
    v0 = initial_velocity(cfg)
    w0 = v0.coeffs * model.msym.outer
    return SolverState(0.0, SpectralVectorField(cfg.grid, w0))


def rhs(state: SolverState, cfg: SolverConfig) -> SpectralVectorField:
    """Projected nonlinear-plus-forcing tendency (viscous part excluded)."""
    return SpectralVectorField(cfg.grid, _model(cfg).rhs(state.w.coeffs, state.t))


def _rk3_substep(model: _Model, wh: np.ndarray, t: float, h: float, key=None) -> np.ndarray:
    fwd, inv, full = _decay(model.grid, model.cfg.nu, h)
    v = wh
    q = None
    for i in range(3):
        if i == 0:
            n_i = model.rhs_half(wh, t, key)
            q = h * n_i
        else:
            n_i = model.rhs_half(v * fwd[i], t + _RK_C[i] * h)
            n_i *= inv[i]
            q = _RK_A[i] * q + h * n_i
        v = v + _RK_B[i] * q
    return v * full


def step(state: SolverState, cfg: SolverConfig, dt: float | None = None) -> SolverState:
    """Advance by ``dt`` (default cfg.dt), sub-stepping if the CFL bound is exceeded."""
    model = _model(cfg)
    dt = cfg.dt if dt is None else dt
    w = state.w.coeffs
    wh = model.hs.cut(w)
    speed = model.term_half(wh, key=w)[1] if cfg.nonlinear_on else 0.0
    cfl = dt * speed * model.grid.k_axis_retained
    m = max(1, math.ceil(cfl / cfg.cfl_safety - 1e-12)) if np.isfinite(cfl) else 1
    h = dt / m
    for j in range(m):
        wh = _rk3_substep(model, wh, state.t + j * h, h, key=w if j == 0 else None)
    if not np.all(np.isfinite(wh)):
        raise BlowUpError(state.t + dt, state.step_count + 1)
    new = SolverState(state.t + dt, SpectralVectorField(cfg.grid, expand_half(wh)),
                      state.step_count + 1, state.last_diag, state.warnings)
    for msg in model.warnings:
        if msg not in new.warnings:
            new.warnings.append(msg)
    return new


def model_term(state: SolverState, cfg: SolverConfig) -> np.ndarray:
    """Unprojected filtered model nonlinearity at the current state."""
    return _model(cfg).term(state.w.coeffs)[0]


def recover_pressure(state: SolverState, cfg: SolverConfig) -> PressureField:
    """q̂_k = -i k·t̂_k / |k|² for t̂ = model term + filtered forcing."""
    model = _model(cfg)
    grid = cfg.grid
    t = model.term(state.w.coeffs)[0].copy() if cfg.nonlinear_on else grid.zeros()
    f = model.filtered_forcing(state.t)
    if f is not None:
        t += f
    k1, k2, k3 = grid.k
    q = -1j * (k1 * t[0] + k2 * t[1] + k3 * t[2]) * grid.k_squared_inv
    q[0, 0, 0] = 0.0
    return PressureField(grid, q)


def step_count_for(cfg: SolverConfig) -> int:
    n = round(cfg.t_end / cfg.dt)
    if abs(n * cfg.dt - cfg.t_end) > 1e-9 * cfg.t_end:
        n = math.floor(cfg.t_end / cfg.dt)
    return n


def simulate(cfg: SolverConfig, sample_every: int = 1, *, keep_fields: bool = False,
             state: SolverState | None = None, sampler=None,
             on_sample: Callable | None = None):
    """Run from ``state`` (default: initialize(cfg)) to cfg.t_end.

    Returns (final state, diagnostic records, list of (t, coeffs) if
    ``keep_fields``).  A final partial step is taken when t_end is not a
    multiple of dt.
    """
    if sampler is None:
        from .diagnostics import sample as sampler
    if sample_every < 1:
        raise ConfigError("sample_every must be >= 1", key="sample_every")
    state = initialize(cfg) if state is None else state
    records, fields = [], []

    def record(st):
        rec = sampler(st, cfg)
        st.last_diag = rec
        records.append(rec)
        if keep_fields:
            fields.append((st.t, st.w.coeffs.copy()))
        if on_sample is not None:
            on_sample(st, rec)

    record(state)
    nsteps = step_count_for(cfg)
    for i in range(nsteps):
        state = step(state, cfg)
        if (i + 1) % sample_every == 0 or i + 1 == nsteps:
            record(state)
    rest = cfg.t_end - state.t
    if rest > 1e-12 * cfg.t_end:
        state = step(state, cfg, dt=rest)
        record(state)
    return state, records, fields
