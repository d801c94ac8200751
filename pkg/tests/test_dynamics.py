import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import band_limited
from gzk import dynamics as dy
from gzk import functionals as fn
from gzk.analysis import line_soliton
from gzk.errors import ConfigError
from gzk.initial import gaussian
from gzk.spectral import Field, Grid, derivative

seeds = st.integers(0, 2**32 - 1)


def test_symbol_values():
    assert dy.dispersion_symbol(0.0, 3.7) == 0
    assert dy.dispersion_symbol(1.0, 0.0) == 1
    assert dy.dispersion_symbol(2.0, 2 * math.pi) == pytest.approx(8 + 2 * (2 * math.pi) ** 2)
    assert dy.dispersion_symbol(2.0, 2 * math.pi) == pytest.approx(86.957, abs=1e-3)


class TestLinearFlow:
    grid = Grid(8.0, 64, 16)

    def test_identity_at_zero(self):
        f = band_limited(self.grid, np.random.default_rng(0))
        assert np.array_equal(dy.linear_propagate(f, 0.0).coeffs, f.coeffs)

    @given(seeds, st.floats(-5, 5))
    def test_unitary_and_modewise(self, seed, t):
        f = band_limited(self.grid, np.random.default_rng(seed), 0.8)
        g = dy.linear_propagate(f, t)
        assert fn.mass(g) == pytest.approx(fn.mass(f), rel=1e-12)
        assert np.allclose(np.abs(g.coeffs), np.abs(f.coeffs), rtol=0, atol=1e-14)

    @given(seeds, st.floats(-3, 3), st.floats(-3, 3))
    def test_group_law(self, seed, s, t):
        f = band_limited(self.grid, np.random.default_rng(seed))
        a = dy.linear_propagate(dy.linear_propagate(f, s), t).values
        b = dy.linear_propagate(f, s + t).values
        assert np.max(np.abs(a - b)) < 1e-12 * max(1.0, np.max(np.abs(b)))

    def test_real_output(self):
        f = band_limited(self.grid, np.random.default_rng(5))
        c = dy.linear_propagate(f, 0.37).coeffs
        raw = np.fft.ifft2(c * c.size)
        assert np.max(np.abs(raw.imag)) < 1e-12


class TestNonlinearRhs:
    def test_zero(self):
        g = Grid(8.0, 32, 8)
        assert np.all(dy.nonlinear_rhs(Field(g, values=np.zeros(g.shape)), 2).coeffs == 0)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_y_independent(self, k):
        g = Grid(8.0, 64, 16)
        X, _ = g.mesh
        r = dy.nonlinear_rhs(Field(g, values=np.exp(-(X**2))), k).values
        assert np.max(np.ptp(r, axis=1)) < 1e-14

    def test_soliton_travels(self):
        g = Grid(32.0, 512, 8)
        c, k = 1.0, 1
        u = line_soliton(c, k, g)
        ut = dy.nonlinear_rhs(u, k).values - derivative(u, 3, 0).values - derivative(u, 1, 2).values
        resid = ut + c * derivative(u, 1, 0).values
        assert math.sqrt(float(np.sum(resid**2)) * g.dx * g.dy) < 1e-6


class TestSimConfig:
    def test_defaults(self):
        cfg = dy.SimConfig()
        assert cfg.steps == 1000 and cfg.grid.shape == (256, 64)

    @pytest.mark.parametrize(
        "kw", [dict(k=0), dict(dt=0.0), dict(t_end=-1.0), dict(points_x=255), dict(sign=0), dict(diagnostics_stride=0)]
    )
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            dy.SimConfig(**kw)


class TestStepper:
    def test_zero_stays_zero(self):
        cfg = dy.SimConfig(points_x=64, points_y=8, half_length_x=8.0)
        u = Field(cfg.grid, values=np.zeros(cfg.grid.shape))
        assert np.all(dy.step_etdrk4(u, cfg).values == 0)

    def test_linear_run_matches_exact(self):
        cfg = dy.SimConfig(points_x=64, points_y=16, half_length_x=8.0, dt=0.01, t_end=1.0)
        u0 = band_limited(cfg.grid, np.random.default_rng(2), 0.5)
        u = u0
        for _ in range(100):
            u = dy.step_etdrk4(u, cfg, nonlinear=False)
        exact = dy.linear_propagate(u0, 1.0).values
        assert np.max(np.abs(u.values - exact)) < 1e-10

    def test_phi_limits_and_continuity(self):
        from gzk.dynamics import _phi_functions

        Q, f1, f2, f3 = _phi_functions(np.array([1e-9, 1e-9j]), 0.5)
        assert np.allclose(Q, 0.25, atol=1e-12)
        for f in (f1, f2, f3):
            assert np.allclose(f, 0.5 / 6, atol=1e-12)
        inside = _phi_functions(np.array([0.999999, -0.999999j]), 1.0)
        outside = _phi_functions(np.array([1.000001, -1.000001j]), 1.0)
        for a, b in zip(inside, outside):
            assert np.allclose(a, b, atol=1e-5)

    def test_self_convergence_fourth_order(self):
        def run(dt):
            cfg = dy.SimConfig(k=2, dt=dt, t_end=0.2, half_length_x=16.0, points_x=128, points_y=16)
            u = gaussian(cfg.grid, amplitude=1.0, sigma=4.0)
            return dy.evolve(u, cfg).final.values

        a, b, c = run(0.0025), run(0.00125), run(0.000625)
        ratio = np.linalg.norm(a - b) / np.linalg.norm(b - c)
        assert 12 <= ratio <= 20
        assert abs(math.log2(ratio) - 4) <= 0.5


class TestEvolve:
    def test_zero_datum(self):
        cfg = dy.SimConfig(points_x=32, points_y=8, half_length_x=8.0, t_end=0.01)
        res = dy.evolve(Field(cfg.grid, values=np.zeros(cfg.grid.shape)), cfg)
        for row in res.diagnostics:
            assert row.mass == row.energy == row.grad_norm_sq == row.linf == 0

    def test_y_independence_preserved(self):
        cfg = dy.SimConfig(k=2, points_x=128, points_y=16, half_length_x=16.0, dt=0.002, t_end=0.5)
        X, _ = cfg.grid.mesh
        res = dy.evolve(Field(cfg.grid, values=1.2 * np.exp(-(X**2))), cfg)
        assert np.max(np.ptp(res.final.values, axis=1)) < 1e-10

    @pytest.mark.parametrize("k", [1, 3])
    def test_defocusing_h1_bounded(self, k):
        """After the initial dispersive transient the H1 norm shows no trend."""
        cfg = dy.SimConfig(k=k, sign=-1, dt=0.005, t_end=12.0, half_length_x=32.0, points_x=256, points_y=8,
                           diagnostics_stride=40)
        u0 = gaussian(cfg.grid, amplitude=1.0, sigma=4.0)
        rows = dy.evolve(u0, cfg).diagnostics
        t = np.array([r.t for r in rows])
        h1 = np.sqrt([r.mass + r.grad_norm_sq for r in rows])
        late = t >= 6.0
        assert abs(np.polyfit(t[late], h1[late], 1)[0]) < 1e-3
        # energy conservation bounds the gradient: ||grad u||^2 <= 2 H
        assert max(r.grad_norm_sq for r in rows) <= 2 * rows[0].energy * (1 + 1e-6)

    def test_outputs(self, tmp_path):
        cfg = dy.SimConfig(k=2, dt=0.01, t_end=0.1, half_length_x=8.0, points_x=64, points_y=8,
                           diagnostics_stride=3, snapshot_stride=5)
        res = dy.evolve(gaussian(cfg.grid), cfg, out_dir=tmp_path)
        times = [r.t for r in res.diagnostics]
        assert times[0] == 0 and times[-1] == pytest.approx(0.1) and len(times) == 5
        assert sorted(p.name for p in tmp_path.iterdir()) == ["snap_0000000.gzkf", "snap_0000005.gzkf",
                                                              "snap_0000010.gzkf"]
        dy.write_diagnostics(tmp_path / "d.csv", res.diagnostics)
        back = dy.read_diagnostics_csv(tmp_path / "d.csv")
        assert [r.as_tuple() for r in back] == [r.as_tuple() for r in res.diagnostics]
        assert (tmp_path / "d.csv").read_text().splitlines()[0] == ",".join(dy.DIAGNOSTICS_HEADER)

    def test_blowup_halts_with_partial_result(self):
        cfg = dy.SimConfig(k=4, dt=0.01, t_end=5.0, half_length_x=8.0, points_x=64, points_y=8)
        u0 = gaussian(cfg.grid, amplitude=30.0, sigma=4.0)
        with pytest.raises(dy.BlowUp) as info:
            dy.evolve(u0, cfg)
        assert info.value.last_valid_time < 5.0
        assert info.value.result.diagnostics
