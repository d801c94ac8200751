"""Doubly periodic Fourier machinery for the truncated cylinder [-L_x, L_x) x [0, 1).

Coefficients are normalized Fourier-series coefficients,
``coeffs = fft2(values) / (N_x * N_y)``, stored in FFT order. With this
normalization Parseval reads ``dx*dy*sum|values|^2 == area*sum|coeffs|^2``.

The same machinery serves the planar ground-state box by building a grid
with a y-period other than one (see :meth:`Grid.square`).
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import IoError

SNAPSHOT_MAGIC = b"GZKF"
SNAPSHOT_VERSION = 1
SNAPSHOT_VERSION_BOX = 2
_HEADER = struct.Struct("<4sIdIId")
_BOX_EXTRA = struct.Struct("<dd")


def fft_workers() -> int:
    """Thread cap for FFTs, read from ``GZK_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("GZK_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid; x spans [-L_x, L_x), y spans [origin_y, origin_y + length_y)."""

    half_length_x: float
    points_x: int
    points_y: int
    length_y: float = 1.0
    origin_y: float = 0.0

    def __post_init__(self):
        if not self.half_length_x > 0 or not self.length_y > 0:
            raise ValueError("domain lengths must be positive")
        for n in (self.points_x, self.points_y):
            if n <= 0 or n % 2:
                raise ValueError(f"point counts must be positive and even, got {n}")

    @classmethod
    def square(cls, half_length: float, points: int) -> "Grid":
        """Square box [-L, L)^2, used as a truncation of the plane."""
        return cls(half_length, points, points, length_y=2 * half_length, origin_y=-half_length)

    @property
    def is_cylinder(self) -> bool:
        return self.length_y == 1.0 and self.origin_y == 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return (self.points_x, self.points_y)

    @property
    def dx(self) -> float:
        return 2 * self.half_length_x / self.points_x

    @property
    def dy(self) -> float:
        return self.length_y / self.points_y

    @property
    def area(self) -> float:
        return 2 * self.half_length_x * self.length_y

    @cached_property
    def x(self) -> np.ndarray:
        return -self.half_length_x + self.dx * np.arange(self.points_x)

    @cached_property
    def y(self) -> np.ndarray:
        return self.origin_y + self.dy * np.arange(self.points_y)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    # wavenumbers in FFT order
    @cached_property
    def kx(self) -> np.ndarray:
        return 2 * np.pi * sfft.fftfreq(self.points_x, d=self.dx)

    @cached_property
    def ky(self) -> np.ndarray:
        return 2 * np.pi * sfft.fftfreq(self.points_y, d=self.dy)

    @cached_property
    def kx_odd(self) -> np.ndarray:
        """x-wavenumbers with the unpaired Nyquist mode zeroed (for odd-order operators)."""
        k = self.kx.copy()
        k[self.points_x // 2] = 0.0
        return k

    @cached_property
    def ky_odd(self) -> np.ndarray:
        k = self.ky.copy()
        k[self.points_y // 2] = 0.0
        return k

    @property
    def freq_x(self) -> np.ndarray:
        """xi_j = pi j / L_x for j = -N_x/2 .. N_x/2 - 1, ascending."""
        return sfft.fftshift(self.kx)

    @property
    def freq_y(self) -> np.ndarray:
        return sfft.fftshift(self.ky)

    @cached_property
    def k2(self) -> np.ndarray:
        """|xi|^2 + |q|^2 on the full lattice, Nyquist modes zeroed as for the gradient."""
        return self.kx_odd[:, None] ** 2 + self.ky_odd[None, :] ** 2


class Field:
    """Real scalar field holding physical values and spectral coefficients.

    Only one representation needs to be current; the other is computed on
    first access and cached until the field is mutated through a setter.
    """

    __slots__ = ("grid", "_values", "_coeffs")

    def __init__(self, grid: Grid, values=None, coeffs=None):
        self.grid = grid
        self._values = None
        self._coeffs = None
        if values is not None:
            self.values = values
        elif coeffs is not None:
            self.coeffs = coeffs
        else:
            self.values = np.zeros(grid.shape)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        X, Y = grid.mesh
        return cls(grid, values=func(X, Y))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            n = self.grid.points_x * self.grid.points_y
            self._values = sfft.ifft2(self._coeffs * n, workers=fft_workers()).real
        return self._values

    @values.setter
    def values(self, arr):
        arr = np.asarray(arr, dtype=float)
        if arr.shape != self.grid.shape:
            raise ValueError(f"values shape {arr.shape} does not match grid {self.grid.shape}")
        self._values = arr
        self._coeffs = None

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            n = self.grid.points_x * self.grid.points_y
            self._coeffs = sfft.fft2(self._values, workers=fft_workers()) / n
        return self._coeffs

    @coeffs.setter
    def coeffs(self, arr):
        arr = np.asarray(arr, dtype=complex)
        if arr.shape != self.grid.shape:
            raise ValueError(f"coeffs shape {arr.shape} does not match grid {self.grid.shape}")
        self._coeffs = arr
        self._values = None

    @property
    def values_current(self) -> bool:
        return self._values is not None

    @property
    def coeffs_current(self) -> bool:
        return self._coeffs is not None

    def copy(self) -> "Field":
        out = Field.__new__(Field)
        out.grid = self.grid
        out._values = None if self._values is None else self._values.copy()
        out._coeffs = None if self._coeffs is None else self._coeffs.copy()
        return out

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, values=self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, values=self.values - other.values)

    def __mul__(self, a: float) -> "Field":
        return Field(self.grid, values=a * self.values)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Field(grid={self.grid!r})"


def forward_transform(f: Field) -> Field:
    """Make the spectral representation current (idempotent)."""
    f.coeffs
    return f


def inverse_transform(f: Field) -> Field:
    f.values
    return f


def derivative(f: Field, order_x: int = 0, order_y: int = 0) -> Field:
    """Spectral derivative d_x^order_x d_y^order_y.

    A direction's Nyquist mode is dropped whenever that direction's order
    is odd, so the result stays real.
    """
    if not (0 <= order_x <= 3 and 0 <= order_y <= 3):
        raise ValueError("derivative orders must lie in 0..3")
    g = f.grid
    kx = g.kx_odd if order_x % 2 else g.kx
    ky = g.ky_odd if order_y % 2 else g.ky
    symbol = ((1j * kx) ** order_x)[:, None] * ((1j * ky) ** order_y)[None, :]
    return Field(g, coeffs=f.coeffs * symbol)


def gradient(f: Field) -> tuple[Field, Field]:
    return derivative(f, 1, 0), derivative(f, 0, 1)


def laplacian(f: Field) -> Field:
    g = f.grid
    return Field(g, coeffs=-(g.kx[:, None] ** 2 + g.ky[None, :] ** 2) * f.coeffs)


def padding_size(n: int, p: int) -> int:
    """Smallest even size >= (p + 1) n / 2, the alias-free length for a p-fold product."""
    return 2 * math.ceil((p + 1) * n / 4)


def _axis_slice(ndim: int, axis: int, start: int, stop: int) -> tuple:
    s = [slice(None)] * ndim
    s[axis] = slice(start, stop)
    return tuple(s)


def _pad_axis(a: np.ndarray, m: int, axis: int) -> np.ndarray:
    n = a.shape[axis]
    h = n // 2
    shape = list(a.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=complex)
    sl = lambda i, j: _axis_slice(a.ndim, axis, i, j)  # noqa: E731
    out[sl(0, h)] = a[sl(0, h)]
    out[sl(m - h + 1, m)] = a[sl(h + 1, n)]
    # the unpaired Nyquist coefficient is split evenly between +-n/2
    out[sl(h, h + 1)] = 0.5 * a[sl(h, h + 1)]
    out[sl(m - h, m - h + 1)] += 0.5 * a[sl(h, h + 1)]
    return out


def _truncate_axis(a: np.ndarray, n: int, axis: int) -> np.ndarray:
    m = a.shape[axis]
    h = n // 2
    shape = list(a.shape)
    shape[axis] = n
    out = np.zeros(shape, dtype=complex)
    sl = lambda i, j: _axis_slice(a.ndim, axis, i, j)  # noqa: E731
    out[sl(0, h)] = a[sl(0, h)]
    out[sl(h + 1, n)] = a[sl(m - h + 1, m)]
    out[sl(h, h + 1)] = a[sl(h, h + 1)] + a[sl(m - h, m - h + 1)]
    return out


def resample_coeffs(c: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Zero-pad or truncate normalized coefficients to a new grid shape."""
    out = c
    for axis, m in enumerate(shape):
        n = out.shape[axis]
        if m > n:
            out = _pad_axis(out, m, axis)
        elif m < n:
            out = _truncate_axis(out, m, axis)
    return out


def int_power(v: np.ndarray, p: int) -> np.ndarray:
    """v**p by repeated multiplication (np.power on floats is far slower)."""
    out = v * v
    for _ in range(p - 2):
        out *= v
    return out if p >= 2 else v.copy()


def dealiased_power(f: Field, p: int) -> Field:
    """Pointwise f**p evaluated alias-free on a zero-padded grid, then truncated back."""
    if not 2 <= p <= 8:
        raise ValueError("power must lie in 2..8")
    g = f.grid
    mx, my = padding_size(g.points_x, p), padding_size(g.points_y, p)
    fine = resample_coeffs(f.coeffs, (mx, my))
    w = fft_workers()
    vals = sfft.ifft2(fine * (mx * my), workers=w).real
    fine = sfft.fft2(int_power(vals, p), workers=w) / (mx * my)
    return Field(g, coeffs=resample_coeffs(fine, g.shape))


def integrate(values: np.ndarray, grid: Grid) -> float:
    return float(np.sum(values) * grid.dx * grid.dy)


def lebesgue_norm(f: Field, p: float) -> float:
    if p == np.inf:
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise ValueError("p must be >= 1")
    return integrate(np.abs(f.values) ** p, f.grid) ** (1.0 / p)


def l2_norm_spectral(f: Field) -> float:
    return math.sqrt(f.grid.area * float(np.sum(np.abs(f.coeffs) ** 2)))


def sobolev_h1_seminorm(f: Field) -> float:
    """||grad f||_2 through Parseval."""
    g = f.grid
    return math.sqrt(g.area * float(np.sum(g.k2 * np.abs(f.coeffs) ** 2)))


def sobolev_norm(f: Field, s: float) -> float:
    """||f||_{H^s} with weight (1 + xi^2 + q^2)^{s/2}."""
    g = f.grid
    weight = (1.0 + g.kx[:, None] ** 2 + g.ky[None, :] ** 2) ** s
    return math.sqrt(g.area * float(np.sum(weight * np.abs(f.coeffs) ** 2)))


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_snapshot(path, f: Field, timestamp: float = 0.0) -> None:
    """Write a GZKF snapshot.

    Cylinder grids use version 1. Planar boxes use version 2, which appends
    the y-extent (length_y, origin_y) after the version-1 header.
    """
    g = f.grid
    version = SNAPSHOT_VERSION if g.is_cylinder else SNAPSHOT_VERSION_BOX
    header = _HEADER.pack(SNAPSHOT_MAGIC, version, g.half_length_x, g.points_x, g.points_y, timestamp)
    if version == SNAPSHOT_VERSION_BOX:
        header += _BOX_EXTRA.pack(g.length_y, g.origin_y)
    body = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    _atomic_write_bytes(Path(path), header + body)


def read_snapshot(path) -> tuple[Field, float]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(data) < _HEADER.size:
        raise IoError(f"{path}: truncated header")
    magic, version, lx, nx, ny, ts = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC or version not in (SNAPSHOT_VERSION, SNAPSHOT_VERSION_BOX):
        raise IoError(f"{path}: not a GZKF snapshot")
    offset = _HEADER.size
    if version == SNAPSHOT_VERSION_BOX:
        ly, oy = _BOX_EXTRA.unpack_from(data, offset)
        offset += _BOX_EXTRA.size
        grid = Grid(lx, nx, ny, length_y=ly, origin_y=oy)
    else:
        grid = Grid(lx, nx, ny)
    if len(data) - offset != 8 * nx * ny:
        raise IoError(f"{path}: payload size mismatch")
    values = np.frombuffer(data, dtype="<f8", offset=offset).reshape(nx, ny).astype(float)
    return Field(grid, values=values), ts
