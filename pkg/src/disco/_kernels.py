"""Hot loops: multi-channel 2D correlation over an explicit list of taps.

A kernel of shape ``(O, C, k, k)`` is flattened into tap offsets
``(dy, dx)`` relative to its center and per-tap channel-mixing matrices
``w[t]`` of shape ``(O, C)``.  Passing every tap gives the dense loop;
passing only taps that carry a nonzero weight gives the sparse loop used
for dilated kernels.

Both implementations compute::

    out[b, o, i, j] = sum_t sum_c w[t, o, c] * x[b, c, i + dy[t], j + dx[t]]

with indices wrapped (circular) or treated as zero outside the grid.
"""
import numpy as np

from ._backend import BACKEND, HAS_NUMBA, _resolve

if HAS_NUMBA:
    from numba import njit
else:  # pragma: no cover
    njit = None


def correlate_taps_numpy(x, dy, dx, w, circular):
    B, C, H, W = x.shape
    O = w.shape[1]
    out = np.zeros((B, O, H, W))
    if len(dy) == 0:
        return out
    if not circular:
        py = int(np.max(np.abs(dy)))
        px = int(np.max(np.abs(dx)))
        xp = np.pad(x, ((0, 0), (0, 0), (py, py), (px, px)))
    for t in range(len(dy)):
        a, b = int(dy[t]), int(dx[t])
        if circular:
            shifted = np.roll(x, (-a, -b), axis=(2, 3))
        else:
            shifted = xp[:, :, py + a:py + a + H, px + b:px + b + W]
        # (O, C) x (B, C, H, W) -> (O, B, H, W)
        out += np.moveaxis(np.tensordot(w[t], shifted, axes=([1], [1])), 0, 1)
    return out


if HAS_NUMBA:

    @njit(cache=False, nogil=True)
    def _correlate_padded_jit(xp, dy, dx, w, py, px, H, W):
        # xp is x padded by (py, px); every read index is in range
        B, C = xp.shape[0], xp.shape[1]
        T, O, _ = w.shape
        out = np.zeros((B, O, H, W))
        for t in range(T):
            a = dy[t] + py
            d = dx[t] + px
            for b in range(B):
                for c in range(C):
                    for o in range(O):
                        wv = w[t, o, c]
                        for i in range(H):
                            src = xp[b, c, i + a, d:d + W]
                            dst = out[b, o, i]
                            for j in range(W):
                                dst[j] += wv * src[j]
        return out

    def correlate_taps_numba(x, dy, dx, w, circular):
        x = np.ascontiguousarray(x, dtype=np.float64)
        B, C, H, W = x.shape
        dy = np.ascontiguousarray(dy, dtype=np.int64)
        dx = np.ascontiguousarray(dx, dtype=np.int64)
        if len(dy) == 0:
            return np.zeros((B, w.shape[1], H, W))
        py, px = int(np.max(np.abs(dy))), int(np.max(np.abs(dx)))
        xp = np.pad(x, ((0, 0), (0, 0), (py, py), (px, px)), mode="wrap" if circular else "constant")
        return _correlate_padded_jit(xp, dy, dx, np.ascontiguousarray(w, dtype=np.float64), py, px, H, W)

else:  # pragma: no cover
    correlate_taps_numba = None


_IMPLS = {"numpy": correlate_taps_numpy, "numba": correlate_taps_numba}


def resolve(backend=None):
    """Backend name actually used for ``backend`` (``None`` means ``DISCO_BACKEND``)."""
    return _resolve(backend) if backend else BACKEND


def correlate_taps(x, dy, dx, w, circular, backend=None):
    """Dispatch to the selected backend (``DISCO_BACKEND`` unless overridden)."""
    impl = _IMPLS[resolve(backend)]
    if impl is None:
        raise ImportError("numba backend requested but numba is not installed")
    return impl(x, dy, dx, w, circular)


def kernel_taps(kernels, sparse):
    """Flatten ``(O, C, k, k)`` kernels into ``(dy, dx, w)`` tap arrays.

    With ``sparse`` only taps where some ``(o, c)`` weight is nonzero are kept.
    """
    O, C, kh, kw = kernels.shape
    cy, cx = (kh - 1) // 2, (kw - 1) // 2
    yy, xx = np.meshgrid(np.arange(kh), np.arange(kw), indexing="ij")
    yy, xx = yy.ravel(), xx.ravel()
    w = kernels.reshape(O, C, kh * kw).transpose(2, 0, 1)
    if sparse:
        keep = np.any(w != 0.0, axis=(1, 2))
        yy, xx, w = yy[keep], xx[keep], w[keep]
    return (yy - cy).astype(np.int64), (xx - cx).astype(np.int64), np.ascontiguousarray(w)
