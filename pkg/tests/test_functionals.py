import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import band_limited, ground_state
from gzk import functionals as fn
from gzk.dynamics import linear_propagate
from gzk.errors import ConstructionFailure, InvalidOrder, ViolationFound
from gzk.groundstate import radial_profile
from gzk.initial import gaussian
from gzk.spectral import Field, Grid

CYL = Grid(16.0, 256, 64)


def zero(grid=CYL):
    return Field(grid, values=np.zeros(grid.shape))


def on_cylinder(gs, amplitude, grid=Grid(12.0, 256, 64)):
    """amplitude * Q_k(r) placed at (0, 1/2); fits inside one period only approximately, fine for predicates."""
    prof = radial_profile(gs)
    X, Y = grid.mesh
    return Field(grid, values=amplitude * prof(np.hypot(X, Y - 0.5)))


class TestConserved:
    def test_zero(self):
        assert fn.mass(zero()) == 0 and fn.energy(zero(), 2) == 0

    def test_mass_of_ground_state(self):
        assert fn.mass(ground_state(2).profile) == pytest.approx(11.7009, abs=1e-4)

    @given(st.integers(0, 2**32 - 1), st.floats(-4, 4))
    def test_mass_invariant_under_linear_flow(self, seed, t):
        f = band_limited(CYL, np.random.default_rng(seed))
        assert fn.mass(linear_propagate(f, t)) == pytest.approx(fn.mass(f), rel=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_constant_field(self, k):
        g = Grid(10.0, 16, 8)
        c = 0.7
        u = Field(g, values=np.full(g.shape, c))
        assert fn.energy(u, k) == pytest.approx(-g.area * c ** (k + 2) / (k + 2), rel=1e-13)

    def test_ground_state_energy_k2(self):
        gs = ground_state(2)
        assert abs(fn.energy(gs.profile, 2)) < 1e-6 * gs.mass_sq

    @given(st.floats(0.1, 3.0), st.integers(1, 4))
    def test_power_integral_exact(self, a, k):
        f = gaussian(Grid(12.0, 128, 32), amplitude=a)
        assert fn.power_integral(f, k + 2) == pytest.approx(fn.lp_power(f, k + 2), rel=1e-10)

    @given(st.floats(0.1, 5.0))
    def test_scaling(self, a):
        f = gaussian(Grid(12.0, 64, 16))
        assert fn.mass(f * a) == pytest.approx(a * a * fn.mass(f), rel=1e-12)
        assert fn.gn_functional(f * a, 2) == pytest.approx(fn.gn_functional(f, 2), rel=1e-10)


class TestPartition:
    @pytest.mark.parametrize("profile", ["cosine_bump", "polynomial_bump"])
    @pytest.mark.parametrize("n", [256, 512, 1024])
    def test_invariants(self, profile, n):
        p = fn.build_partition(profile, n)
        assert np.max(np.abs(p.eta1**2 + p.eta2**2 - 1)) < 1e-12
        assert np.max(np.abs(p.H1 + p.H2 - p.grad_sum)) < 1e-10 * max(1.0, p.c_bound)
        assert p.c_bound > 0
        plateau = (p.y >= 1 / 3) & (p.y <= 2 / 3)
        assert np.all(p.H1[plateau] == 0)
        outside = (p.y < 0.25) | (p.y > 0.75)
        assert np.all(p.eta1[outside] == 0)

    def test_refinement_stable(self):
        a, b = fn.build_partition("cosine_bump", 256), fn.build_partition("cosine_bump", 512)
        assert abs(a.c_bound - b.c_bound) / b.c_bound < 0.01
        assert b.c_bound <= fn.default_c_kt() * (1 + 1e-12)

    def test_exact_sup(self):
        assert fn.default_c_kt() == pytest.approx(1421.2230, abs=1e-3)

    def test_swap(self):
        p = fn.build_partition()
        s = p.swapped()
        assert s.c_bound == p.c_bound
        assert np.max(s.H1 + s.H2) == pytest.approx(p.c_bound, rel=1e-15)

    def test_unresolved(self):
        with pytest.raises(ConstructionFailure):
            fn.build_partition("cosine_bump", 128)

    def test_unknown_profile(self):
        with pytest.raises(ConstructionFailure):
            fn.build_partition("tophat")


class TestCylinderInequality:
    def test_zero(self):
        assert fn.gn_left(zero(), 2) == 0 and fn.gn_right(zero(), 2, 0.17, 1400.0) == 0

    def test_gaussian(self):
        f = gaussian(CYL)
        c = fn.build_partition().c_bound
        assert fn.gn_left(f, 2) < fn.gn_right(f, 2, ground_state(2).sharp_constant, c)

    def test_cos_y_strict(self):
        # cos(2 pi y) on a wide strip: |f|^4 integrates to 3/8 per unit area
        g = Grid(8.0, 32, 32)
        f = Field.from_function(g, lambda x, y: np.cos(2 * np.pi * y))
        assert fn.gn_left(f, 2) == pytest.approx(16 * 3 / 8, rel=1e-12)
        assert fn.gn_left(f, 2) < 0.5 * fn.gn_right(f, 2, ground_state(2).sharp_constant, fn.default_c_kt())

    @pytest.mark.parametrize("k", [2, 3])
    def test_suite(self, k):
        rep = fn.verify_sgn_suite(k, ground_state(k).sharp_constant, fn.build_partition().c_bound, 100, seed=0)
        assert rep.violations == 0 and len(rep.trials) == 100
        assert rep.to_csv().splitlines()[0] == "trial,descriptor_hash,left,right,ratio"

    def test_suite_fails_without_correction(self):
        with pytest.raises(ViolationFound) as info:
            fn.verify_sgn_suite(2, ground_state(2).sharp_constant, 0.0, 100, seed=0)
        assert info.value.ratio > 1
        json.loads(info.value.descriptor)

    def test_suite_deterministic(self):
        a = fn.verify_sgn_suite(2, 0.17, 1400.0, 5, seed=7).to_csv()
        assert a == fn.verify_sgn_suite(2, 0.17, 1400.0, 5, seed=7).to_csv()

    @pytest.mark.parametrize("k", [2, 3])
    def test_degenerate_scan_grows(self, k):
        ratios = [r for _, r in fn.degenerate_scan(k, ground_state(k).sharp_constant)]
        assert all(b > a for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] > 1

    @pytest.mark.parametrize("k", [2, 3])
    def test_concentration_reaches_sharp_constant(self, k):
        gs = ground_state(k)
        vals = [J for _, J in fn.concentration_scan(k, radial_profile(gs))]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert abs(vals[-1] / gs.sharp_constant - 1) < 0.02
        assert vals[-1] <= gs.sharp_constant * (1 + 1e-9)


class TestThresholds:
    def test_small_multiple_of_ground_state(self):
        gs = ground_state(2)
        rep = fn.threshold_report(gs.profile * 0.1, 2, gs, fn.default_c_kt())
        assert rep.gr0_holds and rep.verdict == "GlobalByTheorem"

    def test_ground_state_is_boundary(self):
        gs = ground_state(2)
        rep = fn.threshold_report(gs.profile, 2, gs, fn.default_c_kt())
        assert rep.gr0_holds is False and rep.verdict == "NotCovered"

    def test_k3_small_gaussian(self):
        gs = ground_state(3)
        u0 = gaussian(Grid(32.0, 256, 64), amplitude=0.1)
        rep = fn.threshold_report(u0, 3, gs, fn.default_c_kt())
        assert rep.gr1_holds and rep.gr2_holds and rep.verdict == "GlobalByTheorem"
        assert rep.A_k < rep.f_x0 and rep.X0 < rep.x0
        assert rep.f_x0 == pytest.approx(float(fn.f_threshold(rep.x0, rep.B_k, 3)), rel=1e-12)

    def test_k3_large_gaussian_not_covered(self):
        gs = ground_state(3)
        rep = fn.threshold_report(gaussian(Grid(32.0, 256, 64), amplitude=3.0), 3, gs, fn.default_c_kt())
        assert rep.verdict == "NotCovered"

    def test_rejects_k1(self):
        with pytest.raises(InvalidOrder):
            fn.threshold_report(zero(), 1, ground_state(1), 1.0)

    @pytest.mark.parametrize("k", [3, 4, 5])
    @pytest.mark.parametrize("B", [1e-3, 0.05, 0.7])
    def test_f_maximum_on_log_grid(self, k, B):
        x0 = (2 / (k * B)) ** (2 / (k - 2))
        xs = np.geomspace(x0 / 1.01, x0 * 1.01, 10_000)
        vals = fn.f_threshold(xs, B, k)
        i = int(np.argmax(vals))
        fx0 = x0 * (k - 2) / k
        assert abs(vals[i] - fx0) <= 1e-10 * fx0
        assert xs[i - 1] <= x0 <= xs[i + 1]
        assert float(fn.f_threshold(x0, B, k)) == pytest.approx(fx0, rel=1e-12)

    def test_k2_bound_formula(self):
        assert fn.k2_gradient_bound(1.0, 0.5, 4.0, 2.0) == pytest.approx((1 + 2 * 1 / 4) / (1 - 1 / 4))

    def test_positivity_zero(self):
        assert fn.positivity_check(zero(), 3, ground_state(3), fn.default_c_kt()) == 0

    def test_positivity_k3(self):
        gs = ground_state(3)
        u0 = gaussian(Grid(32.0, 256, 64), amplitude=0.1)
        assert fn.threshold_report(u0, 3, gs, fn.default_c_kt()).gr2_holds
        assert fn.positivity_check(u0, 3, gs, fn.default_c_kt()) >= 0

    def test_positivity_k4_rescaled_ground_state(self):
        gs = ground_state(4)
        u0 = on_cylinder(gs, 0.05)
        assert fn.threshold_report(u0, 4, gs, fn.default_c_kt()).gr2_holds
        assert fn.positivity_check(u0, 4, gs, fn.default_c_kt()) >= 0

    def test_json(self):
        gs = ground_state(2)
        d = json.loads(fn.threshold_report(gs.profile * 0.5, 2, gs, 1.0).to_json())
        assert d["verdict"] == "GlobalByTheorem" and d["x0"] is None
