"""Generalized Zakharov-Kuznetsov equation u_t + d_x(u^{k+1}) + d_x Laplacian(u) = 0 on R x T."""

from .errors import GZKError
from .spectral import Field, Grid

__all__ = ["Field", "GZKError", "Grid"]
__version__ = "0.1.0"
