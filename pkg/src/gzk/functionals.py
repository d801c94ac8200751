"""Conserved functionals, the cylinder Gagliardo-Nirenberg inequality and the
global-existence threshold predicates.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
import numpy as np
import scipy.fft as sfft

from .errors import ConstructionFailure, InvalidOrder, ViolationFound
from .spectral import (
    Field,
    Grid,
    _atomic_write_bytes,
    fft_workers,
    int_power,
    padding_size,
    resample_coeffs,
    sobolev_h1_seminorm,
)

# relative guard band for the strict threshold inequalities
GUARD = 1e-12


def mass(u: Field) -> float:
    """M(u) = int u^2, by Parseval."""
    return u.grid.area * float(np.sum(np.abs(u.coeffs) ** 2))


def grad_norm_sq(u: Field) -> float:
    return sobolev_h1_seminorm(u) ** 2


def power_integral(u: Field, p: int) -> float:
    """int u^p, evaluated alias-free on a padded grid (exact for band-limited u)."""
    g = u.grid
    shape = (padding_size(g.points_x, p), padding_size(g.points_y, p))
    fine = resample_coeffs(u.coeffs, shape)
    vals = sfft.ifft2(fine * (shape[0] * shape[1]), workers=fft_workers()).real
    return float(np.mean(int_power(vals, p))) * g.area


def potential(u: Field, k: int) -> float:
    """||u||_{k+2}^{k+2} (signed integral of u^{k+2} for odd k)."""
    return power_integral(u, k + 2)


def energy(u: Field, k: int, sign: int = 1) -> float:
    """H(u) = int |grad u|^2 / 2 - sign * u^{k+2} / (k+2); sign=-1 is the defocusing energy."""
    return 0.5 * grad_norm_sq(u) - sign * potential(u, k) / (k + 2)


def lp_power(u: Field, p: float) -> float:
    """int |u|^p by plain quadrature."""
    g = u.grid
    return float(np.sum(np.abs(u.values) ** p)) * g.dx * g.dy


# ---------------------------------------------------------------------------
# cylinder Gagliardo-Nirenberg inequality


def gn_left(f: Field, k: int) -> float:
    return lp_power(f, k + 2)


def gn_right(f: Field, k: int, C_kR: float, C_kT: float) -> float:
    m = mass(f)
    return C_kR * m * (grad_norm_sq(f) + C_kT * m) ** (k / 2)


def gn_functional(f: Field, k: int) -> float:
    """Gagliardo-Nirenberg quotient ||f||_{k+2}^{k+2} / (||f||_2^2 ||grad f||_2^k)."""
    return lp_power(f, k + 2) / (mass(f) * grad_norm_sq(f) ** (k / 2))


def _smoothstep(t):
    """C-infinity step 0 -> 1 on [0, 1] built from exp(-1/t); returns (S, S', S'')."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / t), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / (1.0 - t)), 0.0)
        da = np.where(t > 0, a / t**2, 0.0)
        db = np.where(t < 1, -b / (1.0 - t) ** 2, 0.0)
        dda = np.where(t > 0, a * (1.0 - 2.0 * t) / t**4, 0.0)
        ddb = np.where(t < 1, b * (1.0 - 2.0 * (1.0 - t)) / (1.0 - t) ** 4, 0.0)
    s = a + b
    S = a / s
    dS = (da * s - a * (da + db)) / s**2
    ds = da + db
    dds = dda + ddb
    # S = a/s  =>  S'' = (a'' - 2 S' s' - S s'') / s
    ddS = (dda - 2.0 * dS * ds - S * dds) / s
    return S, dS, ddS


def _poly_smoothstep(t):
    """Septic smoothstep (C^3 at the ends); returns (S, S', S'')."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    S = t**4 * (35 - 84 * t + 70 * t**2 - 20 * t**3)
    dS = 140 * t**3 * (1 - t) ** 3
    ddS = 420 * t**2 * (1 - t) ** 2 * (1 - 2 * t)
    return S, dS, ddS


_STEPS = {"cosine_bump": _smoothstep, "polynomial_bump": _poly_smoothstep}

# eta_1 rises on [RISE_A, RISE_B] and falls on [1 - RISE_B, 1 - RISE_A]
RISE_A, RISE_B = 0.25, 1.0 / 3.0


@dataclass
class PartitionChoice:
    """eta_1 = sin(theta), eta_2 = cos(theta) with theta a smooth ramp 0 -> pi/2."""

    profile: str
    y: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    grad_sum: np.ndarray  # (eta1')^2 + (eta2')^2
    c_bound: float
    support: tuple = (RISE_A, 1 - RISE_A)
    plateau: tuple = (RISE_B, 1 - RISE_B)

    def swapped(self) -> "PartitionChoice":
        return PartitionChoice(
            self.profile, self.y, self.eta2, self.eta1, self.H2, self.H1, self.grad_sum, self.c_bound,
            support=self.support, plateau=self.plateau,
        )


def _theta(y, step):
    """Angle profile on one period and its first two derivatives."""
    y = np.mod(y, 1.0)
    w = RISE_B - RISE_A
    rising = y < 0.5
    t = np.where(rising, (y - RISE_A) / w, (1.0 - RISE_A - y) / w)
    S, dS, ddS = step(t)
    sgn = np.where(rising, 1.0, -1.0)
    half_pi = 0.5 * np.pi
    return half_pi * S, half_pi * sgn * dS / w, half_pi * ddS / w**2


def build_partition(profile: str = "cosine_bump", points_y: int = 256, check_tol: float = 1e-3) -> PartitionChoice:
    """Smooth partition eta_1^2 + eta_2^2 = 1 of the period-1 torus.

    Derivatives are analytic. The sampled profile is also differentiated
    spectrally; if the two disagree by more than ``check_tol`` (relative to
    max|theta'|) the grid does not resolve the ramp and ConstructionFailure
    is raised.
    """
    if profile not in _STEPS:
        raise ConstructionFailure(f"unknown partition profile {profile!r}")
    step = _STEPS[profile]
    y = np.arange(points_y) / points_y
    th, dth, ddth = _theta(y, step)
    eta1, eta2 = np.sin(th), np.cos(th)

    # d^2(eta1^2) = d(sin 2th th') = 2 cos 2th th'^2 + sin 2th th''; eta2^2 gives the negative
    d2_eta1_sq = 2.0 * np.cos(2 * th) * dth**2 + np.sin(2 * th) * ddth
    d2_eta2_sq = -d2_eta1_sq
    deta1 = np.cos(th) * dth
    deta2 = -np.sin(th) * dth
    H1 = -0.5 * d2_eta1_sq + deta1**2
    H2 = -0.5 * d2_eta2_sq + deta2**2
    grad_sum = deta1**2 + deta2**2

    outside = (y < RISE_A) | (y > 1 - RISE_A)
    plateau = (y >= RISE_B) & (y <= 1 - RISE_B)
    if np.any(eta1[outside] != 0.0) or np.any(np.abs(eta1[plateau] - 1.0) > 0.0):
        raise ConstructionFailure("support constraints violated on the grid")
    q = 2 * np.pi * sfft.fftfreq(points_y, d=1.0 / points_y)
    q[points_y // 2] = 0.0
    spectral_deta1 = sfft.ifft(1j * q * sfft.fft(eta1)).real
    scale = float(np.max(np.abs(dth)))
    if np.max(np.abs(spectral_deta1 - deta1)) > check_tol * scale:
        raise ConstructionFailure(f"partition ramp unresolved with {points_y} points")

    c_bound = float(np.max(H1 + H2))
    if not c_bound > 0:
        raise ConstructionFailure("partition potential is not positive")
    return PartitionChoice(profile, y, eta1, eta2, H1, H2, grad_sum, c_bound)


_DEFAULT_CKT: dict = {}


def partition_sup(profile: str = "cosine_bump") -> float:
    """Exact sup of H_1 + H_2 = theta'^2, maximized over the rising ramp."""
    from scipy.optimize import minimize_scalar

    step = _STEPS[profile]
    res = minimize_scalar(
        lambda y: -float(_theta(np.array([y]), step)[1][0] ** 2),
        bounds=(RISE_A, RISE_B),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return -float(res.fun)


def default_c_kt() -> float:
    """Working cylinder constant: sup of H_1 + H_2 for the default partition."""
    if "cosine_bump" not in _DEFAULT_CKT:
        _DEFAULT_CKT["cosine_bump"] = partition_sup("cosine_bump")
    return _DEFAULT_CKT["cosine_bump"]


# ---------------------------------------------------------------------------
# randomized verification of the cylinder inequality


def random_smooth_field(grid: Grid, rng: np.random.Generator) -> tuple[Field, str]:
    """Random band-limited bump with random width, anisotropy, translation and modulation."""
    X, Y = grid.mesh
    width_x = rng.uniform(0.3, 4.0)
    width_y = rng.uniform(0.05, 0.6)
    x0 = rng.uniform(-0.25, 0.25) * grid.half_length_x
    y0 = rng.uniform(0.0, 1.0)
    amp = rng.uniform(0.1, 5.0)
    env = np.zeros(grid.shape)
    for m in (-2, -1, 0, 1, 2):
        env += np.exp(-(((X - x0) / width_x) ** 2) - ((Y - y0 - m) / width_y) ** 2)
    kx_mode = rng.uniform(0.0, 3.0)
    phase = rng.uniform(0, 2 * np.pi)
    my = int(rng.integers(0, 3))
    carrier = 1.0 + rng.uniform(0, 0.9) * np.cos(kx_mode * X + 2 * np.pi * my * Y + phase)
    f = Field(grid, values=amp * env * carrier)
    # low-pass to keep the field band-limited on the grid
    g = grid
    cut = (np.abs(g.kx)[:, None] <= 0.5 * np.abs(g.kx).max()) & (np.abs(g.ky)[None, :] <= 0.5 * np.abs(g.ky).max())
    f = Field(g, coeffs=f.coeffs * cut)
    desc = json.dumps(
        dict(amp=amp, wx=width_x, wy=width_y, x0=x0, y0=y0, kx=kx_mode, my=my, phase=phase), sort_keys=True
    )
    return f, desc


@dataclass
class SGNTrial:
    trial: int
    descriptor_hash: str
    left: float
    right: float

    @property
    def ratio(self) -> float:
        return self.left / self.right if self.right > 0 else 0.0


@dataclass
class SGNReport:
    k: int
    C_kR: float
    C_kT: float
    trials: list = field(default_factory=list)
    violations: int = 0

    @property
    def max_ratio(self) -> float:
        return max((t.ratio for t in self.trials), default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "descriptor_hash", "left", "right", "ratio"])
        for t in self.trials:
            w.writerow([t.trial, t.descriptor_hash, repr(t.left), repr(t.right), repr(t.ratio)])
        return buf.getvalue()


def verify_sgn_suite(
    k: int,
    C_kR: float,
    C_kT: float,
    trials: int = 100,
    seed: int = 0,
    grid: Grid | None = None,
    raise_on_violation: bool = True,
) -> SGNReport:
    """Check the cylinder inequality on ``trials`` random smooth fields."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = grid or Grid(16.0, 256, 64)
    rng = np.random.default_rng(seed)
    report = SGNReport(k, C_kR, C_kT)
    for i in range(trials):
        f, desc = random_smooth_field(grid, rng)
        left, right = gn_left(f, k), gn_right(f, k, C_kR, C_kT)
        h = hashlib.sha256(desc.encode()).hexdigest()[:16]
        report.trials.append(SGNTrial(i, h, left, right))
        if left > right * (1 + 1e-9):
            report.violations += 1
            if raise_on_violation:
                raise ViolationFound(f"inequality violated by {desc}", descriptor=desc, ratio=left / right)
    return report


# ---------------------------------------------------------------------------
# global-existence thresholds


def f_threshold(x, B_k: float, k: int):
    """f(x) = x - B_k x^{k/2}."""
    return x - B_k * np.power(x, k / 2)


@dataclass
class ThresholdReport:
    k: int
    mass: float
    energy: float
    grad_sq: float
    C_kT: float
    C_kR: float
    A_k: float
    B_k: float
    x0: float | None
    f_x0: float | None
    X0: float
    gr0_holds: bool | None
    gr1_holds: bool | None
    gr2_holds: bool | None
    relglobal_holds: bool | None
    verdict: str
    # left/right sides of the predicates, for inspection
    sides: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _strict_less(a: float, b: float) -> bool:
    return a < b - GUARD * max(abs(a), abs(b))


def threshold_report(u0: Field, k: int, gs, C_kT: float, check_implication: bool = True) -> ThresholdReport:
    """Evaluate the global-existence predicates for the datum ``u0``.

    ``gs`` is a GroundState of the same k. For k >= 3 the two sufficient
    conditions A_k < f(x0), X(0) < x0 are evaluated as well, and when both
    ground-state predicates hold their implication is asserted.
    """
    if k < 2:
        raise InvalidOrder("threshold predicates need k >= 2")
    if gs.k != k:
        raise ValueError(f"ground state has k={gs.k}, expected {k}")
    M = mass(u0)
    G = grad_norm_sq(u0)
    H = energy(u0, k)
    C_kR = gs.sharp_constant
    A = 2 * H + C_kT * M
    B = 2 * C_kR * M / (k + 2)
    X0 = G + C_kT * M
    sides = {}
    gr0 = gr1 = gr2 = rel = None
    x0 = fx0 = None
    if k == 2:
        gr0 = _strict_less(math.sqrt(M), math.sqrt(gs.mass_sq))
        sides["gr0"] = [math.sqrt(M), math.sqrt(gs.mass_sq)]
        verdict = "GlobalByTheorem" if gr0 else "NotCovered"
    else:
        s = (k - 2) / k
        HQ = gs.energy
        MQ = gs.mass_sq
        lhs1_base = H + C_kT * M / 2
        # a negative base has no real fractional power; GR1 then cannot be asserted
        lhs1 = lhs1_base**s * M ** (1 - s) if lhs1_base >= 0 else float("nan")
        rhs1 = HQ**s * MQ ** (1 - s)
        lhs2 = X0 ** (s / 2) * math.sqrt(M) ** (1 - s)
        rhs2 = math.sqrt(gs.grad_sq) ** s * math.sqrt(MQ) ** (1 - s)
        gr1 = bool(lhs1_base >= 0 and _strict_less(lhs1, rhs1))
        gr2 = _strict_less(lhs2, rhs2)
        sides.update(gr1=[lhs1, rhs1], gr2=[lhs2, rhs2])
        if B > 0:
            x0 = (2 / (k * B)) ** (2 / (k - 2))
            fx0 = x0 * (k - 2) / k
            rel = _strict_less(A, fx0) and _strict_less(X0, x0)
            sides["relglobal"] = [[A, fx0], [X0, x0]]
        else:
            rel = False
        verdict = "GlobalByTheorem" if (gr1 and gr2) else "NotCovered"
        if check_implication and gr1 and gr2 and not rel:
            raise AssertionError("GR1 and GR2 hold but A_k < f(x0), X(0) < x0 fails")
    return ThresholdReport(
        k=k, mass=M, energy=H, grad_sq=G, C_kT=C_kT, C_kR=C_kR, A_k=A, B_k=B, x0=x0, f_x0=fx0, X0=X0,
        gr0_holds=gr0, gr1_holds=gr1, gr2_holds=gr2, relglobal_holds=rel, verdict=verdict, sides=sides,
    )


def k2_gradient_bound(M0: float, H0: float, MQ: float, C_kT: float) -> float:
    """A-priori bound on ||grad u(t)||^2 for k = 2 under mass below the ground state."""
    return (2 * H0 + C_kT * M0**2 / MQ) / (1 - M0 / MQ)


def positivity_check(u0: Field, k: int, gs, C_kT: float, tol: float = 1e-9) -> float:
    """H + C_kT M / 2 - (k-2)/(2k) (||grad u||^2 + C_kT M), nonnegative under GR2."""
    if k < 3:
        raise InvalidOrder("positivity chain needs k >= 3")
    M = mass(u0)
    G = grad_norm_sq(u0)
    H = energy(u0, k)
    val = H + C_kT * M / 2 - (k - 2) / (2 * k) * (G + C_kT * M)
    scale = abs(H) + C_kT * M + G
    if val < -tol * max(scale, 1e-300):
        raise AssertionError(f"positivity chain violated: {val}")
    return val


def write_threshold_json(path, report: ThresholdReport) -> None:
    _atomic_write_bytes(path, report.to_json().encode())


# ---------------------------------------------------------------------------
# scaling scans


def degenerate_scan(k: int, C_kR: float, lambdas=(1.0, 0.5, 0.25, 0.125), grid: Grid | None = None):
    """Ratio left/right with C_kT = 0 for y-independent f = g(lambda x), g = exp(-x^2).

    The ratio scales like lambda^{-k/2}, so it grows without bound as
    lambda -> 0: no inequality holds on the cylinder without the additive term.
    """
    grid = grid or Grid(64.0, 1024, 8)
    X, _ = grid.mesh
    out = []
    for lam in lambdas:
        f = Field(grid, values=np.exp(-((lam * X) ** 2)))
        out.append((lam, gn_left(f, k) / gn_right(f, k, C_kR, 0.0)))
    return out


def concentration_scan(k: int, profile, lambdas=(4.0, 8.0, 16.0), grid: Grid | None = None, radius: float = 0.5):
    """Gagliardo-Nirenberg quotient of lambda Q(lambda x, lambda (y - 1/2)) chi(r).

    ``profile`` maps a radius to Q_k(r); chi is a smooth cutoff supported in
    the disc of ``radius`` about (0, 1/2), so each test function is a planar
    bump inside one period and its functional stays below C_{k,R}, rising
    toward it as lambda grows.
    """
    from .analysis import SUPPORT, eta

    grid = grid or Grid(2.0, 1024, 256)
    X, Y = grid.mesh
    r = np.hypot(X, Y - 0.5)
    chi = eta(r * SUPPORT / radius)
    out = []
    for lam in lambdas:
        f = Field(grid, values=lam * profile(lam * r) * chi)
        out.append((lam, gn_functional(f, k)))
    return out
