import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radm.diagnostics import (
    DiagRecord,
    energy_budget,
    energy_chain_violation,
    h_minus_one_sq,
    integrate,
    model_energy_of,
    sample,
)
from radm.errors import OrderingError
from radm.operators import FilterParams, leray_project
from radm.solver import SolverConfig, SolverState, forcing_coeffs, initial_velocity, simulate
from radm.spectral import SpectralVectorField, random_field, shared_grid


def state_of(grid, coeffs, t=0.0):
    return SolverState(t, SpectralVectorField(grid, coeffs))


def record(t, e=1.0, d=0.0, p=0.0):
    return DiagRecord(t, e, d, e, 0.0, 0.0, 0.0, 0.0, p)


class TestSample:
    def test_zero_state(self):
        cfg = SolverConfig(grid_n=8)
        rec = sample(state_of(cfg.grid, cfg.grid.zeros()), cfg)
        assert all(getattr(rec, f) == 0.0 for f in DiagRecord.field_names())

    def test_filter_off_energies_agree(self, rng):
        cfg = SolverConfig(grid_n=8, filter=FilterParams(0.0, 0.5, 0))
        c = leray_project(random_field(cfg.grid, rng)).coeffs
        rec = sample(state_of(cfg.grid, c), cfg)
        assert rec.model_energy == rec.kinetic_energy

    def test_single_pair_example(self):
        cfg = SolverConfig(grid_n=8, filter=FilterParams(1.0, 1.0, 1))
        v = SpectralVectorField.zeros(cfg.grid)
        v.set_mode((1, 0, 0), (0, 1, 0))
        v.set_mode((-1, 0, 0), (0, 1, 0))
        rec = sample(state_of(cfg.grid, v.coeffs), cfg)
        assert rec.model_energy == pytest.approx(3.0, rel=1e-15)
        assert rec.kinetic_energy == pytest.approx(1.0, rel=1e-15)
        assert rec.model_dissipation == pytest.approx(cfg.nu * 6.0, rel=1e-15)
        assert rec.sobolev_theta == pytest.approx(math.sqrt(2), rel=1e-15)

    def test_forcing_power(self):
        cfg = SolverConfig(grid_n=8, forcing_preset="steady_trig", filter=FilterParams(0.0, 0.5, 0))
        f = forcing_coeffs(cfg, 0.0)
        rec = sample(state_of(cfg.grid, f.copy()), cfg)
        assert rec.forcing_power == pytest.approx(float(np.sum(np.abs(f) ** 2)), rel=1e-15)

    @given(st.integers(0, 2**32 - 1), st.floats(0.05, 4), st.floats(0.01, 1), st.integers(0, 30))
    def test_energy_chain(self, seed, alpha, theta, order):
        cfg = SolverConfig(grid_n=8, filter=FilterParams(alpha, theta, order))
        c = leray_project(random_field(cfg.grid, np.random.default_rng(seed))).coeffs
        rec = sample(state_of(cfg.grid, c), cfg)
        assert energy_chain_violation(rec, cfg) == 0.0
        assert rec.model_energy >= rec.kinetic_energy

    def test_chain_detects_breach(self):
        cfg = SolverConfig(grid_n=8)
        bad = DiagRecord(0.0, 0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        assert energy_chain_violation(bad, cfg) == pytest.approx(0.5)

    def test_model_energy_of(self, rng):
        cfg = SolverConfig(grid_n=8)
        v = leray_project(random_field(cfg.grid, rng))
        assert model_energy_of(v, cfg) == pytest.approx(sample(state_of(cfg.grid, v.coeffs), cfg).model_energy)


class TestIntegrate:
    def test_gregory_exact_for_cubics(self):
        t = np.linspace(0.0, 1.0, 11)
        g = 1 + 2 * t - 3 * t**2 + 4 * t**3
        assert integrate(t, g, "gregory") == pytest.approx(1 + 1 - 1 + 1, rel=1e-14)
        assert abs(integrate(t, g) - 2.0) > 1e-3

    def test_gregory_needs_uniform_samples(self):
        with pytest.raises(ValueError):
            integrate(np.array([0, 0.1, 0.3, 0.4, 0.5]), np.ones(5), "gregory")
        with pytest.raises(ValueError):
            integrate(np.array([0, 0.1, 0.2]), np.ones(3), "gregory")

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            integrate(np.arange(3.0), np.ones(3), "simpson")


class TestEnergyBudget:
    def test_ordering(self):
        with pytest.raises(OrderingError):
            energy_budget([record(0.0), record(0.2), record(0.1)])
        with pytest.raises(OrderingError):
            energy_budget([record(0.0), record(0.0)])
        with pytest.raises(OrderingError):
            energy_budget([record(0.0)])

    def test_exact_linear_balance(self):
        # E(t) = 1 - t with constant dissipation 1: zero residual
        recs = [record(t, e=1 - t, d=1.0) for t in np.linspace(0, 0.5, 6)]
        rep = energy_budget(recs)
        assert rep.max_residual < 1e-15 and rep.final_residual < 1e-15

    def test_unforced_viscous_run(self):
        cfg = SolverConfig(grid_n=16, ic_preset="random_divfree", t_end=0.1, dt=2e-3)
        _, recs, _ = simulate(cfg)
        rep = energy_budget(recs, quadrature="gregory")
        assert rep.final_residual < 1e-8

    def test_conservative_limit(self):
        cfg = SolverConfig(grid_n=16, ic_preset="random_divfree", nu=0.0, t_end=0.1, dt=2e-3)
        _, recs, _ = simulate(cfg)
        e = [r.model_energy for r in recs]
        assert abs(e[-1] - e[0]) / e[0] < 1e-8

    def test_forced_a_priori_bound(self):
        cfg = SolverConfig(grid_n=16, ic_preset="random_divfree", forcing_preset="steady_trig", t_end=0.2)
        _, recs, _ = simulate(cfg)
        v0 = initial_velocity(cfg).coeffs
        fsq = [h_minus_one_sq(cfg.grid, forcing_coeffs(cfg, r.t)) for r in recs]
        rep = energy_budget(recs, nu=cfg.nu, initial_norm_sq=float(np.sum(np.abs(v0) ** 2)), forcing_hm1_sq=fsq)
        assert rep.bound_holds
        assert rep.bound_lhs[-1] < rep.bound_rhs
        assert rep.final_residual < 1e-6

    def test_forced_bound_needs_viscosity(self):
        recs = [record(0.0), record(0.1)]
        with pytest.raises(ValueError):
            energy_budget(recs, nu=0.0, initial_norm_sq=1.0, forcing_hm1_sq=1.0)

    def test_h_minus_one(self):
        grid = shared_grid(8)
        c = grid.zeros()
        c[0][grid.mode_index((2, 0, 0))] = 1
        c[0][grid.mode_index((-2, 0, 0))] = 1
        assert h_minus_one_sq(grid, c) == pytest.approx(0.5)
