"""Explicit downscaling matrices for 1D signals, applied separably to images.

Output sample ``i`` of an ``n_in -> n_out`` operator reads the input at
coordinate ``(i + 0.5) * n_in / n_out - 0.5``, so grid centers coincide.
Nearest is the exception: it reads sample ``floor(i * n_in / n_out)``,
which makes repeated integer-factor downscales compose exactly.
"""
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError, SizeError
from .grid import BoundaryMode, as_kernel


class InterpMethod(str, Enum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"
    BICUBIC = "bicubic"

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown interpolation method {value!r}") from None


def cubic_weight(x, a=-0.5):
    """Keys cubic convolution kernel."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    return np.where(
        x <= 1,
        (a + 2) * x**3 - (a + 3) * x**2 + 1,
        np.where(x < 2, a * x**3 - 5 * a * x**2 + 8 * a * x - 4 * a, 0.0),
    )


def interp_kernel(method, x):
    """Continuous interpolation kernel of ``method`` evaluated at offsets ``x``."""
    method = InterpMethod.coerce(method)
    x = np.asarray(x, dtype=np.float64)
    if method is InterpMethod.NEAREST:
        return ((x >= -0.5) & (x < 0.5)).astype(np.float64)
    if method is InterpMethod.BILINEAR:
        return np.maximum(0.0, 1.0 - np.abs(x))
    return cubic_weight(x)


@dataclass(frozen=True, eq=False)
class InterpOperator:
    matrix: np.ndarray
    method: InterpMethod
    boundary: BoundaryMode

    @property
    def n_out(self):
        return self.matrix.shape[0]

    @property
    def n_in(self):
        return self.matrix.shape[1]

    @property
    def factor(self):
        """Exact size ratio ``n_out / n_in``."""
        return Fraction(self.n_out, self.n_in)

    @property
    def integer_factor(self):
        return self.n_in % self.n_out == 0

    def __call__(self, f):
        """Apply to the last axis of ``f``."""
        f = np.asarray(f, dtype=np.float64)
        if f.shape[-1] != self.n_in:
            raise SizeError(f"signal length {f.shape[-1]} != operator input {self.n_in}")
        return f @ self.matrix.T


def _row_taps(i, n_in, n_out, method):
    # position (x_num / den) = (i + 1/2) n_in / n_out - 1/2
    x = Fraction((2 * i + 1) * n_in - n_out, 2 * n_out)
    if method is InterpMethod.NEAREST:
        return [(i * n_in // n_out, 1.0)]
    base = x.numerator // x.denominator
    t = float(x - base)
    if method is InterpMethod.BILINEAR:
        taps = [(base, 1.0 - t)]
        if t:
            taps.append((base + 1, t))
        return taps
    offsets = range(-1, 3)
    return [(base + m, float(cubic_weight(t - m))) for m in offsets]


@lru_cache(maxsize=256)
def _downscale_matrix(n_in, n_out, method, boundary):
    mat = np.zeros((n_out, n_in))
    for i in range(n_out):
        for idx, wgt in _row_taps(i, n_in, n_out, method):
            if boundary is BoundaryMode.CIRCULAR:
                mat[i, idx % n_in] += wgt
            elif 0 <= idx < n_in:
                mat[i, idx] += wgt
        if boundary is BoundaryMode.ZERO:
            mat[i] /= mat[i].sum()
    mat.setflags(write=False)
    return mat


def make_downscale(n_in, n_out, method=InterpMethod.BILINEAR, boundary=BoundaryMode.CIRCULAR):
    """Build the ``n_out x n_in`` matrix that downsamples by ``n_in / n_out``.

    Circular boundary wraps sample indices.  Zero boundary drops taps that
    fall outside the grid and renormalises the row, so every row still sums
    to one.
    """
    if int(n_in) != n_in or int(n_out) != n_out or not 1 <= n_out <= n_in:
        raise DomainError(f"need integers 1 <= n_out <= n_in, got n_in={n_in}, n_out={n_out}")
    method = InterpMethod.coerce(method)
    boundary = BoundaryMode.coerce(boundary)
    return InterpOperator(_downscale_matrix(int(n_in), int(n_out), method, boundary), method, boundary)


def downscale_image(img, op):
    """``L @ img @ L.T`` over the last two axes (leading axes are batch)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim < 2 or img.shape[-2:] != (op.n_in, op.n_in):
        raise SizeError(f"image shape {img.shape} does not match operator input {op.n_in}")
    return op.matrix @ img @ op.matrix.T


def scaled_size(n, factor):
    """Grid side after downscaling side ``n`` by ``factor`` (> 1), rounded."""
    return max(1, int(np.floor(n / float(factor) + 0.5)))


def interpolate_kernel(kernel, scale, size, method=InterpMethod.BILINEAR):
    """Project the continuously rescaled kernel ``s^-d k(t / s)`` onto a side-``size`` grid.

    ``k`` is the interpolant of the discrete taps under ``method``; ``d`` is
    the kernel dimension, so the amplitude factor is ``1/s`` in 1D and
    ``1/s**2`` in 2D.
    """
    kernel = as_kernel(kernel)
    if size % 2 == 0 or size < 1:
        raise SizeError(f"target size must be odd, got {size}")
    scale = float(scale)
    k = kernel.shape[0]
    src = np.arange(k) - (k - 1) // 2
    dst = np.arange(size) - (size - 1) // 2
    weights = interp_kernel(method, dst[:, None] / scale - src[None, :]) / scale
    if kernel.ndim == 1:
        return weights @ kernel
    return weights @ kernel @ weights.T
