"""Energy functionals, norms and identity residuals sampled along a run."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from scipy.integrate import trapezoid

from .errors import OrderingError
from .operators import model_symbols
from .solver import SolverConfig, SolverState, _model
from .spectral import SpectralVectorField, divergence_residual, sobolev_norm

_EPS_GUARD = 1e-300


@dataclass(frozen=True)
class DiagRecord:
    t: float
    model_energy: float
    model_dissipation: float
    kinetic_energy: float
    sobolev_theta: float
    sobolev_one_plus_theta: float
    div_residual: float
    orth_defect: float
    forcing_power: float

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def sample(state: SolverState, cfg: SolverConfig) -> DiagRecord:
    """Diagnostics of ``state``; all quantities come from the same w."""
    grid = cfg.grid
    model = _model(cfg)
    w = state.w.coeffs
    weight = model.msym.energy_sq
    amp = np.sum(np.abs(w) ** 2, axis=0)
    weighted = weight * amp
    theta = cfg.filter.theta

    if cfg.nonlinear_on and np.any(w):
        term = model.term(w)[0]
        partner = w * weight
        num = abs(float(np.real(np.vdot(term, partner))))
        orth = num / (float(np.linalg.norm(term)) * float(np.linalg.norm(partner)) + _EPS_GUARD)
    else:
        orth = 0.0

    f = model.filtered_forcing(state.t)
    power = 0.0 if f is None else float(np.real(np.vdot(f * weight, w)))

    return DiagRecord(
        t=float(state.t),
        model_energy=0.5 * float(weighted.sum()),
        model_dissipation=cfg.nu * float(np.sum(grid.k_squared * weighted)),
        kinetic_energy=0.5 * float(amp.sum()),
        sobolev_theta=sobolev_norm(state.w, theta),
        sobolev_one_plus_theta=sobolev_norm(state.w, 1.0 + theta),
        div_residual=divergence_residual(state.w),
        orth_defect=orth,
        forcing_power=power,
    )


def energy_chain_violation(record: DiagRecord, cfg: SolverConfig, k_max: float | None = None) -> float:
    """Largest relative breach of  KE <= E_model <= (N+1)(1 + α^{2θ}k_max^{2θ}) KE.

    Returns 0 when both inequalities hold.
    """
    p = cfg.filter
    ke, me = record.kinetic_energy, record.model_energy
    if cfg.model_mode == "plain_rotational_nse" or p.filter_off:
        upper = 1.0
    else:
        k_max = cfg.grid.k_max_retained if k_max is None else k_max
        a_max = 1.0 + p.alpha ** (2 * p.theta) * k_max ** (2 * p.theta)
        upper = a_max * (p.deconv_order + 1) if cfg.model_mode == "radm" else a_max * a_max
    scale = max(ke, _EPS_GUARD)
    return max(0.0, (ke - me) / scale, (me - upper * ke) / scale)


def integrate(t: np.ndarray, g: np.ndarray, method: str = "trapezoid") -> float:
    """∫ g dt over sampled values.

    "gregory" adds the second-order Gregory end corrections (exact for
    cubics, needs uniform spacing and at least 5 samples); otherwise the
    trapezoidal rule.
    """
    t = np.asarray(t, dtype=float)
    g = np.asarray(g, dtype=float)
    total = float(trapezoid(g, t))
    if method == "trapezoid":
        return total
    if method != "gregory":
        raise ValueError(f"unknown quadrature {method!r}")
    if len(t) < 5:
        raise ValueError("Gregory quadrature needs at least 5 samples")
    h = np.diff(t)
    if np.max(np.abs(h - h.mean())) > 1e-9 * h.mean():
        raise ValueError("Gregory quadrature needs uniformly spaced samples")
    h = h.mean()
    d0, dn = g[1] - g[0], g[-1] - g[-2]
    dd0, ddn = g[2] - 2 * g[1] + g[0], g[-1] - 2 * g[-2] + g[-3]
    return total - h / 12 * (dn - d0) - h / 24 * (ddn + dd0)


def _cumtrapz(t: np.ndarray, g: np.ndarray) -> np.ndarray:
    out = np.zeros_like(g)
    out[1:] = np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(t))
    return out


@dataclass(frozen=True)
class BudgetReport:
    """Discrete energy balance  E(t) - E(0) + ∫diss - ∫power  and the a priori bound.

    residuals: per-record balance residual (cumulative trapezoid)
    final_residual: residual at the last record using ``quadrature``
    bound_lhs: 2E(t) + ∫diss per record;  bound_rhs: ||v₀||² + ν⁻¹∫||f||²₋₁
    """

    times: np.ndarray
    residuals: np.ndarray
    final_residual: float
    quadrature: str
    bound_lhs: np.ndarray | None
    bound_rhs: float | None

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))

    @property
    def bound_holds(self) -> bool | None:
        if self.bound_rhs is None:
            return None
        return bool(np.all(self.bound_lhs <= self.bound_rhs * (1 + 1e-10) + 1e-14))


def energy_budget(records, *, quadrature: str = "trapezoid", nu: float | None = None,
                  initial_norm_sq: float | None = None,
                  forcing_hm1_sq=None) -> BudgetReport:
    """Integrated energy balance over a time-ordered record sequence.

    ``forcing_hm1_sq`` holds ||f(t_i)||²_{-1} at each record time (or a
    scalar for steady forcing); with ``initial_norm_sq`` = ||v₀||² and ``nu``
    it enables the a priori bound check.
    """
    records = list(records)
    if len(records) < 2:
        raise OrderingError("energy budget needs at least two records")
    t = np.array([r.t for r in records])
    if np.any(np.diff(t) <= 0):
        raise OrderingError("records must be strictly increasing in t")
    energy = np.array([r.model_energy for r in records])
    diss = np.array([r.model_dissipation for r in records])
    power = np.array([r.forcing_power for r in records])

    residuals = np.abs(energy - energy[0] + _cumtrapz(t, diss) - _cumtrapz(t, power))
    final = abs(energy[-1] - energy[0] + integrate(t, diss, quadrature) - integrate(t, power, quadrature))

    lhs = rhs = None
    if initial_norm_sq is not None:
        lhs = 2.0 * energy + _cumtrapz(t, diss)
        rhs = float(initial_norm_sq)
        if forcing_hm1_sq is not None:
            if nu is None or nu <= 0:
                raise ValueError("the forced a priori bound needs nu > 0")
            fsq = np.broadcast_to(np.asarray(forcing_hm1_sq, dtype=float), t.shape)
            rhs += float(trapezoid(fsq, t)) / nu
    return BudgetReport(t, residuals, float(final), quadrature, lhs, rhs)


def h_minus_one_sq(grid, coeffs: np.ndarray) -> float:
    """||f||²_{-1,2} = Σ_{k≠0} |k|^{-2} |f_k|²."""
    return float(np.sum(grid.k_squared_inv * np.sum(np.abs(coeffs) ** 2, axis=0)))


def model_energy_of(v: SpectralVectorField, cfg: SolverConfig) -> float:
    weight = model_symbols(v.grid, cfg.filter, cfg.model_mode).energy_sq
    return 0.5 * float(np.sum(weight * np.abs(v.coeffs) ** 2))
