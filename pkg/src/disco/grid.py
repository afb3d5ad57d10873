"""Dense small-array primitives: same-size correlation, dilation, outer products.

Signals are 1D float arrays, images 2D float arrays and kernels odd-sized
arrays of matching dimensionality whose center tap sits at index
``(k - 1) // 2``.  Convolution here means correlation (no kernel flip)::

    out[i] = sum_m kernel[m] * f[i + m - c]
"""
from enum import Enum

import numpy as np

from . import _kernels
from .errors import DomainError, SizeError


class BoundaryMode(str, Enum):
    CIRCULAR = "circular"
    ZERO = "zero"

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown boundary mode {value!r}") from None


def as_kernel(kernel, ndim=None):
    """Validate and return ``kernel`` as a float array with odd sides."""
    k = np.asarray(kernel, dtype=np.float64)
    if ndim is not None and k.ndim != ndim:
        raise SizeError(f"expected a {ndim}D kernel, got shape {k.shape}")
    if k.ndim not in (1, 2) or any(n % 2 == 0 for n in k.shape):
        raise SizeError(f"kernel must be 1D or 2D with odd sides, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise DomainError("kernel has non-finite entries")
    return k


def _as_signal(f):
    f = np.asarray(f, dtype=np.float64)
    if f.ndim not in (1, 2) or f.size == 0:
        raise SizeError(f"expected a nonempty 1D signal or 2D image, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise DomainError("signal has non-finite entries")
    return f


def convolve(f, kernel, mode=BoundaryMode.CIRCULAR):
    """Same-size centered correlation of a signal or image with ``kernel``.

    ``mode`` is ``"circular"`` (indices wrap) or ``"zero"`` (outside is 0).
    In circular mode the kernel may not be larger than the signal.
    """
    f = _as_signal(f)
    kernel = as_kernel(kernel, ndim=f.ndim)
    mode = BoundaryMode.coerce(mode)
    if mode is BoundaryMode.CIRCULAR and any(k > n for k, n in zip(kernel.shape, f.shape)):
        raise SizeError(f"kernel {kernel.shape} larger than signal {f.shape} in circular mode")
    x = f.reshape((1, 1) + (f.shape if f.ndim == 2 else (1,) + f.shape))
    k4 = kernel.reshape((1, 1) + (kernel.shape if kernel.ndim == 2 else (1,) + kernel.shape))
    dy, dx, w = _kernels.kernel_taps(k4, sparse=False)
    out = _kernels.correlate_taps(x, dy, dx, w, mode is BoundaryMode.CIRCULAR)
    return out.reshape(f.shape)


def convolve_separable(f, u, v, mode=BoundaryMode.CIRCULAR):
    """Correlate image ``f`` with the separable kernel ``outer(u, v)`` in two 1D passes."""
    f = _as_signal(f)
    if f.ndim != 2:
        raise SizeError("separable convolution needs a 2D image")
    cols = convolve(f, np.asarray(u, dtype=np.float64)[:, None], mode)
    return convolve(cols, np.asarray(v, dtype=np.float64)[None, :], mode)


def dilate(kernel, factor):
    """Insert ``factor - 1`` zeros between taps (the a trous upscaling).

    Output side is ``(k - 1) * factor + 1`` with ``out[i*factor, j*factor] = kernel[i, j]``.
    """
    kernel = as_kernel(kernel)
    if int(factor) != factor or factor < 1:
        raise DomainError(f"dilation factor must be a positive integer, got {factor!r}")
    factor = int(factor)
    out = np.zeros(tuple((n - 1) * factor + 1 for n in kernel.shape))
    out[tuple(slice(None, None, factor) for _ in kernel.shape)] = kernel
    return out


def outer(u, v):
    return np.outer(np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64))


def embed_center(kernel, size):
    """Zero-pad an odd kernel symmetrically up to side ``size`` (same center)."""
    kernel = as_kernel(kernel)
    pads = []
    for n in kernel.shape:
        if size < n or (size - n) % 2:
            raise SizeError(f"cannot center a side-{n} kernel in side {size}")
        pads.append(((size - n) // 2, (size - n) // 2))
    return np.pad(kernel, pads)
