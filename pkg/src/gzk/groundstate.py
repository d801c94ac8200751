"""Ground state of Laplacian(Q) - Q + Q^{k+1} = 0 on the plane via Petviashvili iteration.

The plane is truncated to a periodic square box. Radial symmetry is not
imposed; it is checked on the result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from . import functionals as fn
from .errors import Degenerate, InvalidOrder, NoConvergence
from .spectral import Field, Grid, fft_workers, int_power


@dataclass
class GroundState:
    k: int
    profile: Field
    mass_sq: float
    grad_sq: float
    potential: float
    residual: float
    sharp_constant: float
    iterations: int = 0

    @property
    def half_length(self) -> float:
        return self.profile.grid.half_length_x

    @property
    def points(self) -> int:
        return self.profile.grid.points_x

    @property
    def energy(self) -> float:
        """H(Q_k) from the computed norms."""
        return 0.5 * self.grad_sq - self.potential / (self.k + 2)

    @property
    def l2_norm(self) -> float:
        return math.sqrt(self.mass_sq)


def ground_residual(Q: Field, k: int) -> float:
    """L2 norm of Laplacian(Q) - Q + Q^{k+1}, with the nonlinearity collocated."""
    g = Q.grid
    k2 = g.kx[:, None] ** 2 + g.ky[None, :] ** 2
    lin = -(1.0 + k2) * Q.coeffs
    nl = Field(g, values=int_power(Q.values, k + 1)).coeffs
    return math.sqrt(g.area * float(np.sum(np.abs(lin + nl) ** 2)))


def petviashvili_solve(
    k: int,
    half_length: float = 20.0,
    points: int = 512,
    tol: float = 1e-11,
    max_iter: int = 500,
    seed_amplitude: float = 3.0,
) -> GroundState:
    """Positive radial ground state on [-L, L)^2.

    Iterates Q <- S^gamma (1 - Laplacian)^{-1} Q^{k+1} with
    S = <(1 - Laplacian) Q, Q> / <Q^{k+1}, Q> and gamma = (k+1)/k from the
    seed 3 exp(-(x^2 + y^2)) until the residual drops below ``tol``.
    """
    if k < 1:
        raise InvalidOrder("k must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    grid = Grid.square(half_length, points)
    X, Y = grid.mesh
    w = fft_workers()
    n = points * points
    symbol = 1.0 + grid.kx[:, None] ** 2 + grid.ky[None, :] ** 2
    gamma = (k + 1) / k

    q = seed_amplitude * np.exp(-(X**2 + Y**2))
    qh = sfft.fft2(q, workers=w)
    residual = math.inf
    for it in range(1, max_iter + 1):
        nl = sfft.fft2(int_power(q, k + 1), workers=w)
        num = float(np.vdot(qh, symbol * qh).real)
        den = float(np.vdot(qh, nl).real)
        if not (den > 0 and num > 0 and math.isfinite(num) and math.isfinite(den)):
            raise Degenerate(f"stabilizing factor undefined at iteration {it}")
        S = num / den
        # residual of the current iterate, in physical L2 units
        res = (nl - symbol * qh) / n
        residual = math.sqrt(grid.area * float(np.sum(np.abs(res) ** 2)))
        if residual < tol:
            break
        qh = S**gamma * nl / symbol
        q = sfft.ifft2(qh, workers=w).real
        peak = float(np.max(np.abs(q)))
        if not math.isfinite(peak) or peak > 1e8 or peak < 1e-12:
            raise Degenerate(f"iterate collapsed or blew up at iteration {it} (max {peak:.3g})")
    else:
        raise NoConvergence(f"residual {residual:.3e} after {max_iter} iterations", last_residual=residual)

    Q = Field(grid, values=q)
    return make_ground_state(k, Q, iterations=it)


def make_ground_state(k: int, Q: Field, iterations: int = 0) -> GroundState:
    m = fn.mass(Q)
    G = fn.grad_norm_sq(Q)
    P = fn.lp_power(Q, k + 2)
    gs = GroundState(
        k=k,
        profile=Q,
        mass_sq=m,
        grad_sq=G,
        potential=P,
        residual=ground_residual(Q, k),
        sharp_constant=float("nan"),
        iterations=iterations,
    )
    gs.sharp_constant = sharp_constant(gs)
    return gs


def sharp_constant(gs: GroundState) -> float:
    """C_{k,R} = 2^{(k-2)/2} (k+2) / (k^{k/2} ||Q_k||_2^k)."""
    k = gs.k
    return 2 ** ((k - 2) / 2) * (k + 2) / (k ** (k / 2) * gs.l2_norm**k)


@dataclass
class ReferenceQuantities:
    s_k: float
    gradQ_Q: float
    gradQ_Q_closed: float
    HQ_MQ: float | None
    HQ_MQ_closed: float | None


def reference_quantities(gs: GroundState) -> ReferenceQuantities:
    """Right-hand sides of the k >= 3 thresholds, from raw norms and from closed forms."""
    k = gs.k
    if k < 2:
        raise InvalidOrder("reference quantities need k >= 2")
    s = (k - 2) / k
    norm = gs.l2_norm
    gradQ_Q = math.sqrt(gs.grad_sq) ** s * norm ** (1 - s)
    gradQ_Q_closed = (k / 2) ** ((k - 2) / (2 * k)) * norm
    HQ_MQ = HQ_MQ_closed = None
    if k >= 3:
        HQ_MQ = gs.energy**s * gs.mass_sq ** (1 - s)
        HQ_MQ_closed = ((k - 2) / 4) ** ((k - 2) / k) * gs.mass_sq
    return ReferenceQuantities(s, gradQ_Q, gradQ_Q_closed, HQ_MQ, HQ_MQ_closed)


def evaluate_at(f: Field, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Trigonometric interpolant of ``f`` at scattered points (direct sum; small batches only)."""
    g = f.grid
    c = f.coeffs
    ex = np.exp(1j * np.outer(x + g.half_length_x, g.kx))  # (P, Nx)
    ey = np.exp(1j * np.outer(y - g.origin_y, g.ky))  # (P, Ny)
    # kill the unpaired Nyquist modes' imaginary parts by symmetric evaluation
    return np.einsum("pi,ij,pj->p", ex, c, ey).real


def radial_asymmetry(gs: GroundState, radii=(0.5, 1.0, 2.0, 3.0), angles: int = 7) -> float:
    """Max relative spread of Q over circles about the centre, plus grid reflection symmetry."""
    Q = gs.profile
    v = Q.values
    peak = float(np.max(np.abs(v)))
    # reflections x -> -x, y -> -y and transposition about the centre grid point
    refl = np.roll(v[::-1, :], 1, axis=0)
    worst = float(np.max(np.abs(refl - v))) / peak
    worst = max(worst, float(np.max(np.abs(v - v.T))) / peak)
    theta = np.linspace(0, np.pi / 2, angles)
    for r in radii:
        vals = evaluate_at(Q, r * np.cos(theta), r * np.sin(theta))
        worst = max(worst, float(np.ptp(vals)) / peak)
    return worst


def radial_profile(gs: GroundState, oversample: int = 16):
    """Cubic spline of Q(r) built from the x-axis slice refined by Fourier interpolation."""
    from scipy.interpolate import CubicSpline

    Q = gs.profile
    g = Q.grid
    j0 = g.points_y // 2  # y = 0 row index
    slice_ = Q.values[:, j0]
    n = slice_.size
    m = n * oversample
    c = sfft.fft(slice_)
    fine = np.zeros(m, dtype=complex)
    h = n // 2
    fine[:h] = c[:h]
    fine[m - h + 1 :] = c[h + 1 :]
    fine[h] = 0.5 * c[h]
    fine[m - h] = 0.5 * c[h]
    vals = sfft.ifft(fine).real * oversample
    xs = -g.half_length_x + (2 * g.half_length_x / m) * np.arange(m)
    keep = xs >= 0
    spline = CubicSpline(xs[keep], vals[keep], bc_type=((1, 0.0), "not-a-knot"))
    rmax = float(xs[keep][-1])

    def profile(r):
        r = np.asarray(r, dtype=float)
        out = spline(np.minimum(r, rmax))
        return np.where(r <= rmax, out, 0.0)

    return profile


def report_dict(gs: GroundState) -> dict:
    ref = reference_quantities(gs) if gs.k >= 2 else None
    return {
        "k": gs.k,
        "L": gs.half_length,
        "N": gs.points,
        "mass_sq": gs.mass_sq,
        "grad_sq": gs.grad_sq,
        "potential": gs.potential,
        "residual": gs.residual,
        "sharp_constant": gs.sharp_constant,
        "s_k": ref.s_k if ref else None,
        "ref_quantities": None
        if ref is None
        else {
            "gradQ_Q": ref.gradQ_Q,
            "gradQ_Q_closed": ref.gradQ_Q_closed,
            "HQ_MQ": ref.HQ_MQ,
            "HQ_MQ_closed": ref.HQ_MQ_closed,
        },
    }


def report_json(gs: GroundState) -> str:
    return json.dumps(report_dict(gs), indent=2, sort_keys=True)
