"""Time evolution of u_t + sign * d_x(u^{k+1}) + d_x Laplacian(u) = 0.

In Fourier variables the linear part is u_hat' = i w(xi, q) u_hat with
w = xi^3 + xi q^2, integrated exactly; the nonlinearity is handled by
fourth-order exponential time differencing (Cox-Matthews ETDRK4).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import functionals as fn
from .errors import ConfigError, NonFinite
from .spectral import Field, Grid, _atomic_write_bytes, dealiased_power, write_snapshot

DIAGNOSTICS_HEADER = ("t", "mass", "energy", "grad_norm_sq", "linf", "X_t")
BLOWUP_LINF = 1e6


def dispersion_symbol(xi, q):
    """w(xi, q) = xi^3 + xi q^2."""
    return xi**3 + xi * q**2


def _symbol(grid: Grid) -> np.ndarray:
    # Nyquist column of xi dropped: keeps exp(i t w) Hermitian
    return dispersion_symbol(grid.kx_odd[:, None], grid.ky[None, :])


def linear_propagate(u: Field, t: float) -> Field:
    """Free flow exp(-t d_x Laplacian): multiply coefficients by exp(i t w)."""
    return Field(u.grid, coeffs=u.coeffs * np.exp(1j * t * _symbol(u.grid)))


def nonlinear_rhs(u: Field, k: int, sign: int = 1) -> Field:
    """-sign * d_x(u^{k+1})."""
    g = u.grid
    power = dealiased_power(u, k + 1)
    return Field(g, coeffs=-sign * 1j * g.kx_odd[:, None] * power.coeffs)


@dataclass
class SimConfig:
    k: int = 2
    dt: float = 1e-3
    t_end: float = 1.0
    half_length_x: float = 32.0
    points_x: int = 256
    points_y: int = 64
    sign: int = 1
    snapshot_stride: int = 0  # 0 disables snapshots
    diagnostics_stride: int = 10
    c_kt: float | None = None  # None: default partition constant

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError("k: must be an integer >= 1")
        if self.k + 1 > 8:
            raise ConfigError("k: k + 1 exceeds dealiasing capacity (8)")
        if not self.dt > 0:
            raise ConfigError("dt: must be positive")
        if not self.t_end > 0:
            raise ConfigError("t_end: must be positive")
        if self.sign not in (1, -1):
            raise ConfigError("sign: must be +1 or -1")
        if self.diagnostics_stride < 1:
            raise ConfigError("diagnostics_stride: must be >= 1")
        if self.snapshot_stride < 0:
            raise ConfigError("snapshot_stride: must be >= 0")
        try:
            self.grid
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from exc
        phase = self.dt * float(np.max(np.abs(_symbol(self.grid))))
        if not math.isfinite(phase):
            raise ConfigError("dt: propagator phase is not finite")

    @property
    def grid(self) -> Grid:
        return Grid(self.half_length_x, self.points_x, self.points_y)

    @property
    def steps(self) -> int:
        return max(1, round(self.t_end / self.dt))

    @property
    def step_size(self) -> float:
        """dt adjusted so that an integer number of steps lands on t_end."""
        return self.t_end / self.steps

    @property
    def C_kT(self) -> float:
        return fn.default_c_kt() if self.c_kt is None else self.c_kt


def _phi_functions(z: np.ndarray, h: float, contour_points: int = 32, radius: float = 1.0):
    """ETDRK4 weights h*phi(z); contour mean for |z| < 1, direct formulas elsewhere."""
    z = np.asarray(z, dtype=complex)

    def direct(z):
        ez = np.exp(z)
        ez2 = np.exp(z / 2)
        Q = h * (ez2 - 1) / z
        f1 = h * (-4 - z + ez * (4 - 3 * z + z**2)) / z**3
        f2 = h * (2 + z + ez * (-2 + z)) / z**3
        f3 = h * (-4 - 3 * z - z**2 + ez * (4 - z)) / z**3
        return Q, f1, f2, f3

    small = np.abs(z) < 1.0
    out = [np.empty_like(z) for _ in range(4)]
    with np.errstate(divide="ignore", invalid="ignore"):
        big = direct(np.where(small, 1.0, z))
    roots = radius * np.exp(2j * np.pi * (np.arange(1, contour_points + 1) - 0.5) / contour_points)
    zs = z[small][:, None] + roots[None, :]
    ctr = [c.mean(axis=1) for c in direct(zs)]
    for o, b, c in zip(out, big, ctr):
        o[...] = b
        o[small] = c
    return out


class ETDRK4:
    """Precomputed ETDRK4 stepper for a fixed grid, step size and nonlinearity."""

    def __init__(self, grid: Grid, dt: float, k: int, sign: int = 1, nonlinear: bool = True):
        self.grid, self.dt, self.k, self.sign, self.nonlinear = grid, dt, k, sign, nonlinear
        Lin = 1j * _symbol(grid)
        self.E = np.exp(dt * Lin)
        self.E2 = np.exp(dt * Lin / 2)
        self.Q, self.f1, self.f2, self.f3 = _phi_functions(dt * Lin, dt)

    def N(self, c: np.ndarray) -> np.ndarray:
        if not self.nonlinear:
            return np.zeros_like(c)
        return nonlinear_rhs(Field(self.grid, coeffs=c), self.k, self.sign).coeffs

    def step(self, c: np.ndarray) -> np.ndarray:
        if not self.nonlinear:
            return self.E * c
        Nv = self.N(c)
        a = self.E2 * c + self.Q * Nv
        Na = self.N(a)
        b = self.E2 * c + self.Q * Na
        Nb = self.N(b)
        cc = self.E2 * a + self.Q * (2 * Nb - Nv)
        Nc = self.N(cc)
        return self.E * c + self.f1 * Nv + 2 * self.f2 * (Na + Nb) + self.f3 * Nc


@lru_cache(maxsize=16)
def _stepper(grid: Grid, dt: float, k: int, sign: int, nonlinear: bool) -> ETDRK4:
    return ETDRK4(grid, dt, k, sign, nonlinear)


def step_etdrk4(u: Field, cfg: SimConfig, nonlinear: bool = True) -> Field:
    """One ETDRK4 step of size ``cfg.step_size``; ``nonlinear=False`` runs the free flow."""
    if u.grid != cfg.grid:
        raise ValueError("field grid does not match configuration")
    stepper = _stepper(u.grid, cfg.step_size, cfg.k, cfg.sign, nonlinear)
    with np.errstate(over="ignore", invalid="ignore"):
        c = stepper.step(u.coeffs)
    if not np.all(np.isfinite(c)):
        raise NonFinite("non-finite state after step")
    return Field(u.grid, coeffs=c)


@dataclass
class DiagnosticsRow:
    t: float
    mass: float
    energy: float
    grad_norm_sq: float
    linf: float
    X_t: float

    def as_tuple(self):
        return (self.t, self.mass, self.energy, self.grad_norm_sq, self.linf, self.X_t)


def diagnostics_row(t: float, u: Field, k: int, sign: int, C_kT: float, mass0: float) -> DiagnosticsRow:
    G = fn.grad_norm_sq(u)
    return DiagnosticsRow(
        t=t,
        mass=fn.mass(u),
        energy=fn.energy(u, k, sign),
        grad_norm_sq=G,
        linf=float(np.max(np.abs(u.values))),
        X_t=G + C_kT * mass0,
    )


def diagnostics_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIAGNOSTICS_HEADER)
    for r in rows:
        w.writerow([f"{v:.17g}" for v in r.as_tuple()])
    return buf.getvalue()


def read_diagnostics_csv(path) -> list[DiagnosticsRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [DiagnosticsRow(**{k: float(v) for k, v in row.items()}) for row in reader]


@dataclass
class EvolveResult:
    final: Field
    diagnostics: list
    snapshots: list = field(default_factory=list)
    t_final: float = 0.0


class BlowUp(NonFinite):
    """NonFinite raised by :func:`evolve`, carrying the partial run."""

    def __init__(self, message, result: EvolveResult):
        super().__init__(message, last_valid_time=result.t_final)
        self.result = result


def evolve(u0: Field, cfg: SimConfig, out_dir=None, nonlinear: bool = True) -> EvolveResult:
    """Integrate from u0 to cfg.t_end.

    Diagnostics are recorded at t=0 and every ``diagnostics_stride`` steps
    (always including the final step). Snapshots go to ``out_dir`` every
    ``snapshot_stride`` steps when both are set. The run halts with
    :class:`BlowUp` on NaN/Inf or when max|u| exceeds 1e6.
    """
    grid = cfg.grid
    if u0.grid != grid:
        raise ValueError("initial field grid does not match configuration")
    dt, n = cfg.step_size, cfg.steps
    C_kT = cfg.C_kT
    m0 = fn.mass(u0)
    stepper = _stepper(grid, dt, cfg.k, cfg.sign, nonlinear)
    rows = [diagnostics_row(0.0, u0, cfg.k, cfg.sign, C_kT, m0)]
    result = EvolveResult(final=u0, diagnostics=rows)
    out_dir = Path(out_dir) if out_dir is not None else None

    def snapshot(step, u, t):
        path = out_dir / f"snap_{step:07d}.gzkf"
        write_snapshot(path, u, t)
        result.snapshots.append(path)

    if out_dir is not None and cfg.snapshot_stride:
        snapshot(0, u0, 0.0)
    c = u0.coeffs
    for i in range(1, n + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            c_new = stepper.step(c)
        t = i * dt
        if not np.all(np.isfinite(c_new)):
            raise BlowUp(f"non-finite state at t={t:.6g}", result)
        u = Field(grid, coeffs=c_new)
        # sum |c| bounds max|u|; only evaluate the exact maximum when the bound trips
        if float(np.sum(np.abs(c_new))) > BLOWUP_LINF:
            linf = float(np.max(np.abs(u.values)))
            if linf > BLOWUP_LINF:
                raise BlowUp(f"max|u| = {linf:.3g} exceeds {BLOWUP_LINF:g} at t={t:.6g}", result)
        if i % cfg.diagnostics_stride == 0 or i == n:
            rows.append(diagnostics_row(t, u, cfg.k, cfg.sign, C_kT, m0))
        if out_dir is not None and cfg.snapshot_stride and (i % cfg.snapshot_stride == 0 or i == n):
            snapshot(i, u, t)
        c = c_new
        result.final, result.t_final = u, t
    return result


def write_diagnostics(path, rows) -> None:
    _atomic_write_bytes(Path(path), diagnostics_csv(rows).encode())
