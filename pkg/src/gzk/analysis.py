"""Resonance function, line solitons, dyadic projectors, discrete X^{s,b}
norms and the empirical L^4 Strichartz probe.

Frequencies use the angular convention q = 2 pi m for the period-1 torus.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.fft as sfft

from .dynamics import dispersion_symbol
from .errors import DomainTooSmall, ResolutionError
from .functionals import _smoothstep
from .spectral import Field, Grid, derivative, fft_workers, int_power

# ---------------------------------------------------------------------------
# resonance


def resonance(xi1, q1, xi2, q2):
    """3 xi1 xi2 (xi1 + xi2) + xi2 q1^2 + xi1 q2^2 + 2 (xi1 + xi2) q1 q2."""
    return 3 * xi1 * xi2 * (xi1 + xi2) + xi2 * q1**2 + xi1 * q2**2 + 2 * (xi1 + xi2) * q1 * q2


def resonance_from_symbol(xi1, q1, xi2, q2):
    """w(xi1 + xi2, q1 + q2) - w(xi1, q1) - w(xi2, q2)."""
    return dispersion_symbol(xi1 + xi2, q1 + q2) - dispersion_symbol(xi1, q1) - dispersion_symbol(xi2, q2)


def resonance_second_derivatives(xi):
    """Exact (d^2/dxi1^2, d^2/dq1^2) of H(xi1, q1, xi - xi1, q - q1): (-6 xi, -2 xi)."""
    return -6.0 * xi, -2.0 * xi


def second_derivatives_check(xi, q, xi1, q1):
    """Central second differences of xi1 -> H(xi1, q1, xi - xi1, q - q1) and q1 -> H(...).

    H is cubic in each variable, so central differences are exact up to
    rounding and a wide stencil keeps rounding small.
    """

    def H(a, b):
        return resonance(a, b, xi - a, q - b)

    h = 0.25 * (1.0 + np.maximum.reduce([np.abs(xi), np.abs(q), np.abs(xi1), np.abs(q1)]))
    d_xi = (H(xi1 + h, q1) - 2 * H(xi1, q1) + H(xi1 - h, q1)) / h**2
    d_q = (H(xi1, q1 + h) - 2 * H(xi1, q1) + H(xi1, q1 - h)) / h**2
    return d_xi, d_q


# ---------------------------------------------------------------------------
# line solitons


def soliton_profile(x, c: float, k: int):
    """Q_c(x) = [c (k+2)/2 sech^2(k sqrt(c) x / 2)]^{1/k}."""
    return (c * (k + 2) / 2 / np.cosh(k * math.sqrt(c) * np.asarray(x) / 2) ** 2) ** (1.0 / k)


def line_soliton(c: float, k: int, grid: Grid, x0: float = 0.0) -> Field:
    """y-independent gKdV soliton centred at x0 on the cylinder grid."""
    if not c > 0:
        raise ValueError("speed must be positive")
    peak = float(soliton_profile(0.0, c, k))
    edge = float(soliton_profile(grid.half_length_x, c, k))
    if edge > 1e-12 * peak:
        raise DomainTooSmall(
            f"Q_c(L_x) / max Q_c = {edge / peak:.2e} exceeds 1e-12; enlarge half_length_x"
        )
    X, _ = grid.mesh
    # wrap the shift into the periodic box
    L = grid.half_length_x
    s = np.mod(X - x0 + L, 2 * L) - L
    return Field(grid, values=soliton_profile(s, c, k))


def soliton_residual(u: Field, c: float, k: int) -> float:
    """L2 norm of -Q'' + c Q - Q^{k+1}."""
    r = -derivative(u, 2, 0).values + c * u.values - int_power(u.values, k + 1)
    g = u.grid
    return math.sqrt(float(np.sum(r**2)) * g.dx * g.dy)


# ---------------------------------------------------------------------------
# cutoffs and dyadic multipliers

PLATEAU, SUPPORT = 5.0 / 4.0, 8.0 / 5.0


def eta(s):
    """Even C-infinity cutoff: 1 on [-5/4, 5/4], 0 outside (-8/5, 8/5)."""
    t = (np.abs(np.asarray(s, dtype=float)) - PLATEAU) / (SUPPORT - PLATEAU)
    return 1.0 - _smoothstep(t)[0]


def phi(s):
    """eta(s) - eta(2 s), supported in 5/8 <= |s| <= 8/5."""
    return eta(s) - eta(2 * np.asarray(s, dtype=float))


def dyadic_multiplier(weight, N: int):
    """phi_N evaluated on a weight array; N = 1 uses eta."""
    if N < 1 or N & (N - 1):
        raise ValueError(f"N must be a dyadic integer >= 1, got {N}")
    return eta(weight) if N == 1 else phi(weight / N)


def spatial_weight(grid: Grid) -> np.ndarray:
    """|(xi, q)| = sqrt(3 xi^2 + q^2) on the lattice (FFT order)."""
    return np.sqrt(3 * grid.kx[:, None] ** 2 + grid.ky[None, :] ** 2)


def bracket(x):
    return np.sqrt(1.0 + np.asarray(x) ** 2)


# ---------------------------------------------------------------------------
# space-time fields


@dataclass
class SpaceTimeField:
    """Real field on a uniform periodic time window [-T/2, T/2) times the spatial grid."""

    grid: Grid
    window: float
    values: np.ndarray  # (N_t, N_x, N_y)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[1:] != self.grid.shape:
            raise ValueError("values must have shape (N_t, N_x, N_y)")

    @property
    def nt(self) -> int:
        return self.values.shape[0]

    @property
    def dt(self) -> float:
        return self.window / self.nt

    @property
    def times(self) -> np.ndarray:
        return -self.window / 2 + self.dt * np.arange(self.nt)

    @property
    def tau(self) -> np.ndarray:
        return 2 * np.pi * sfft.fftfreq(self.nt, d=self.dt)

    @property
    def sigma_max(self) -> float:
        return math.pi / self.dt

    @classmethod
    def free_wave(cls, phi0: Field, window: float = 4.0, nt: int = 512, cutoff: bool = True) -> "SpaceTimeField":
        """eta(t) exp(-t d_x Laplacian) phi0 sampled on the window."""
        g = phi0.grid
        st = cls(g, window, np.zeros((nt,) + g.shape))
        t = st.times
        w = dispersion_symbol(g.kx_odd[:, None], g.ky[None, :])
        amp = eta(t) if cutoff else np.ones_like(t)
        n = g.points_x * g.points_y
        c = phi0.coeffs * n
        for i, ti in enumerate(t):
            if amp[i] == 0.0:
                continue
            st.values[i] = amp[i] * sfft.ifft2(c * np.exp(1j * ti * w), workers=fft_workers()).real
        return st

    def spatial_coeffs(self) -> np.ndarray:
        n = self.grid.points_x * self.grid.points_y
        return sfft.fft2(self.values, axes=(1, 2), workers=fft_workers()) / n

    def spectral(self) -> np.ndarray:
        """Normalized space-time coefficients over the (tau, xi, q) lattice."""
        return sfft.fftn(self.values, workers=fft_workers()) / self.values.size

    def modulation_coeffs(self) -> np.ndarray:
        """Coefficients over (sigma, xi, q) with sigma = tau - w(xi, q).

        Obtained by transforming exp(-i t w) u_hat(t) in time, which avoids
        aliasing of the large dispersive frequencies on the tau lattice.
        """
        g = self.grid
        w = dispersion_symbol(g.kx_odd[:, None], g.ky[None, :])
        v = self.spatial_coeffs()
        v *= np.exp(-1j * self.times[:, None, None] * w[None, :, :])
        return sfft.fft(v, axis=0, workers=fft_workers()) / self.nt

    @classmethod
    def from_modulation_coeffs(cls, grid: Grid, window: float, mc: np.ndarray) -> "SpaceTimeField":
        nt = mc.shape[0]
        st = cls(grid, window, np.zeros((nt,) + grid.shape))
        w = dispersion_symbol(grid.kx_odd[:, None], grid.ky[None, :])
        v = sfft.ifft(mc * nt, axis=0, workers=fft_workers())
        v *= np.exp(1j * st.times[:, None, None] * w[None, :, :])
        n = grid.points_x * grid.points_y
        st.values = sfft.ifft2(v * n, axes=(1, 2), workers=fft_workers()).real
        return st

    def l2_norm(self) -> float:
        g = self.grid
        return math.sqrt(float(np.sum(self.values**2)) * self.dt * g.dx * g.dy)

    def lp_norm(self, p: float) -> float:
        g = self.grid
        return (float(np.sum(np.abs(self.values) ** p)) * self.dt * g.dx * g.dy) ** (1.0 / p)


def project_spatial(u, N: int):
    """P_N: multiply spatial coefficients by phi_N(|(xi, q)|)."""
    if isinstance(u, Field):
        return Field(u.grid, coeffs=u.coeffs * dyadic_multiplier(spatial_weight(u.grid), N))
    mult = dyadic_multiplier(spatial_weight(u.grid), N)
    n = u.grid.points_x * u.grid.points_y
    c = u.spatial_coeffs() * mult[None]
    vals = sfft.ifft2(c * n, axes=(1, 2), workers=fft_workers()).real
    return SpaceTimeField(u.grid, u.window, vals)


def max_modulation_shell(u: SpaceTimeField) -> int:
    """Largest dyadic L whose shell still meets the sigma lattice (5L/8 <= sigma_max)."""
    L = 1
    while 5 * (2 * L) / 8 <= u.sigma_max:
        L *= 2
    return L


def project_modulation(u: SpaceTimeField, L: int) -> SpaceTimeField:
    """Q_L: multiply by phi_L(tau - w(xi, q))."""
    if L > max_modulation_shell(u):
        raise ResolutionError(f"modulation shell L={L} lies beyond sigma_max={u.sigma_max:.4g}")
    sigma = u.tau
    mult = dyadic_multiplier(sigma, L)
    mc = u.modulation_coeffs() * mult[:, None, None]
    return SpaceTimeField.from_modulation_coeffs(u.grid, u.window, mc)


def xsb_norm(u: SpaceTimeField, s: float, b: float) -> float:
    """Discrete Bourgain norm with weights <tau - w>^b <|(xi, q)|>^s."""
    mc = u.modulation_coeffs()
    ws = bracket(spatial_weight(u.grid)) ** (2 * s)
    wb = bracket(u.tau) ** (2 * b)
    total = np.einsum("t,txy,xy->", wb, np.abs(mc) ** 2, ws)
    return math.sqrt(float(total) * u.window * u.grid.area)


def time_cutoff_hb_norm(b: float, window: float = 4.0, nt: int = 512) -> float:
    """||eta||_{H^b} on the periodic time window."""
    t = -window / 2 + (window / nt) * np.arange(nt)
    c = sfft.fft(eta(t)) / nt
    tau = 2 * np.pi * sfft.fftfreq(nt, d=window / nt)
    return math.sqrt(window * float(np.sum(bracket(tau) ** (2 * b) * np.abs(c) ** 2)))


# ---------------------------------------------------------------------------
# Strichartz probe


def shell_grid(N: int, half_length_x: float = math.pi) -> Grid:
    """Cylinder grid resolving shell N with room for an exact L^4 quadrature."""
    top = SUPPORT * N
    mx = math.ceil((top / math.sqrt(3)) * half_length_x / math.pi)
    my = math.ceil(top / (2 * math.pi))
    # fourfold products must not alias: points > 4 * max index
    nx = max(8, 1 << math.ceil(math.log2(4 * mx + 2)))
    ny = max(8, 1 << math.ceil(math.log2(4 * my + 2)))
    return Grid(half_length_x, nx, ny)


def random_shell_field(grid: Grid, N: int, rng: np.random.Generator) -> Field:
    """Unit-magnitude coefficients with i.i.d. uniform phases on supp phi_N, Hermitian-symmetrized."""
    weight = spatial_weight(grid)
    mult = dyadic_multiplier(weight, N)
    mask = mult > 0
    # Nyquist lines carry no Hermitian partner; drop them
    mask[grid.points_x // 2, :] = False
    mask[:, grid.points_y // 2] = False
    phases = np.exp(2j * np.pi * rng.random(grid.shape))
    c = np.where(mask, phases, 0.0)
    # Hermitian symmetrization c(-k) = conj c(k)
    flip = np.roll(np.flip(c, axis=(0, 1)), shift=(1, 1), axis=(0, 1))
    c = 0.5 * (c + np.conj(flip))
    if not np.any(c):
        raise ValueError(f"shell N={N} has no lattice points on this grid")
    return Field(grid, coeffs=c)


@dataclass
class ScaleStats:
    N: int
    max_ratio: float
    mean_ratio: float


@dataclass
class ProbeReport:
    s: float
    b: float
    trials: int
    seed: int
    per_scale: list = field(default_factory=list)
    slope: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "exponents": {"s": self.s, "b": self.b},
            "per_scale": [asdict(p) for p in self.per_scale],
            "slope": self.slope,
            "trials": self.trials,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def trend_slope(scales, values) -> float:
    """Least-squares slope of log(values) against log(scales)."""
    return float(np.polyfit(np.log(scales), np.log(values), 1)[0])


def strichartz_ratio_scan(
    seed: int = 0,
    scales=(1, 2, 4, 8, 16, 32, 64),
    trials: int = 20,
    exponents=((1 / 6, 3 / 8),),
    window: float = 4.0,
    nt: int = 512,
) -> list[ProbeReport]:
    """Ratio ||u||_{L^4} / ||u||_{X^{s,b}} for cut-off free waves with random shell data.

    One report per (s, b) pair in ``exponents``; every pair is evaluated on
    the same random draws.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    reports = [ProbeReport(s, b, trials, seed) for s, b in exponents]
    for N in scales:
        grid = shell_grid(N)
        ratios = [[] for _ in exponents]
        for _ in range(trials):
            phi0 = random_shell_field(grid, N, rng)
            u = SpaceTimeField.free_wave(phi0, window, nt)
            l4 = u.lp_norm(4)
            for r, (s, b) in zip(ratios, exponents):
                r.append(l4 / xsb_norm(u, s, b))
        for rep, r in zip(reports, ratios):
            rep.per_scale.append(ScaleStats(N, float(np.max(r)), float(np.mean(r))))
    for rep in reports:
        rep.slope = trend_slope([p.N for p in rep.per_scale], [p.max_ratio for p in rep.per_scale])
    return reports
