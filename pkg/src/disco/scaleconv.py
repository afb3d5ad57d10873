"""Scale-convolution on scale-translation feature maps and the group action on them.

A feature map has axes ``(batch, channel, scale, y, x)``.  Output slice
``sigma`` of a layer with scale extent ``Q`` is::

    out[sigma] = sum_{q < Q, sigma + q < S} f[sigma + q] * kernel_sigma[q]

where ``kernel_sigma[q]`` combines the basis slot of scale ``sigma`` with the
weights for offset ``q``.  Downscaling the input by ``step**n`` moves
content ``n`` slices toward smaller scales, so :func:`act` reads slice
``sigma + n``; the top ``n`` slices then have no source and are marked
invalid.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .basis import MultiScaleBasis, kernels_from_weights
from .errors import ConfigurationError, DomainError, SizeError
from .grid import BoundaryMode
from .resample import InterpMethod, downscale_image, make_downscale, scaled_size


class Nonlinearity(str, Enum):
    IDENTITY = "identity"
    RELU = "relu"


@dataclass(eq=False)
class ScaleFeatureMap:
    values: np.ndarray       # (B, C, S, H, W)
    scale_set: object
    valid: np.ndarray = None  # (S,) bool, slices that carry comparable content

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 5:
            raise SizeError(f"feature map must be 5D (B, C, S, H, W), got {self.values.shape}")
        if self.values.shape[2] != len(self.scale_set):
            raise SizeError(f"scale axis {self.values.shape[2]} != {len(self.scale_set)} scales")
        if self.valid is None:
            self.valid = np.ones(self.values.shape[2], dtype=bool)
        self.valid = np.asarray(self.valid, dtype=bool)

    @property
    def shape(self):
        return self.values.shape


def _as_batch(images):
    x = np.asarray(images, dtype=np.float64)
    if x.ndim == 2:
        x = x[None, None]
    elif x.ndim == 3:
        x = x[:, None]
    elif x.ndim != 4:
        raise SizeError(f"expected (H, W), (B, H, W) or (B, C, H, W) images, got {x.shape}")
    return x


def lift(images, scale_set, mode="delta"):
    """Lift images to a feature map.

    ``delta`` puts the image on the smallest scale and zeros elsewhere.
    ``broadcast`` copies it onto every scale, which commutes with
    :func:`act` on valid slices; the equivariance harness uses it.
    """
    x = _as_batch(images)
    S = len(scale_set)
    out = np.zeros(x.shape[:2] + (S,) + x.shape[2:])
    if mode == "delta":
        out[:, :, 0] = x
    elif mode == "broadcast":
        out[:] = x[:, :, None]
    else:
        raise DomainError(f"unknown lift mode {mode!r}")
    return ScaleFeatureMap(out, scale_set)


def downscaled_side(n, factor):
    """Side after downscaling by an exact :class:`~disco.scales.Scale` factor."""
    if factor.is_integer() and n % factor.as_int() == 0:
        return n // factor.as_int()
    return scaled_size(n, float(factor))


def act(f, shift, interp=InterpMethod.NEAREST, boundary=BoundaryMode.CIRCULAR):
    """Downscale every slice by ``step**shift`` and move it ``shift`` slices down the scale axis."""
    S = len(f.scale_set)
    if int(shift) != shift or not 0 <= shift < S:
        raise DomainError(f"shift must be in [0, {S - 1}], got {shift}")
    shift = int(shift)
    if shift == 0:
        return ScaleFeatureMap(f.values.copy(), f.scale_set, f.valid.copy())
    B, C, _, H, W = f.shape
    if H != W:
        raise SizeError("group action needs square slices")
    factor = f.scale_set.step ** shift
    L = make_downscale(H, downscaled_side(H, factor), interp, boundary)
    out = np.zeros((B, C, S, L.n_out, L.n_out))
    out[:, :, :S - shift] = downscale_image(f.values[:, :, shift:], L)
    valid = np.zeros(S, dtype=bool)
    valid[:S - shift] = f.valid[shift:]
    return ScaleFeatureMap(out, f.scale_set, valid)


@dataclass(eq=False)
class ScaleConvLayer:
    basis: MultiScaleBasis
    weights: np.ndarray  # (out_channels, in_channels, Q, J)
    boundary: BoundaryMode = BoundaryMode.CIRCULAR
    _kernels: list = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.boundary = BoundaryMode.coerce(self.boundary)
        if self.weights.ndim != 4 or self.weights.shape[3] != self.basis.num_functions:
            raise SizeError(f"weights must be (O, C, Q, {self.basis.num_functions}), got {self.weights.shape}")
        if not 1 <= self.extent <= self.basis.num_scales:
            raise ConfigurationError(f"scale extent {self.extent} outside [1, {self.basis.num_scales}]")
        if not np.all(np.isfinite(self.weights)):
            raise DomainError("weights have non-finite entries")

    @property
    def extent(self):
        return self.weights.shape[2]

    @property
    def in_channels(self):
        return self.weights.shape[1]

    @property
    def out_channels(self):
        return self.weights.shape[0]

    def kernels(self):
        """Per-scale kernels, each ``(O, C, Q, k, k)``."""
        if self._kernels is None:
            self._kernels = kernels_from_weights(self.basis, self.weights)
        return self._kernels


def scale_convolve(f, layer, sparse=True, backend=None):
    """Apply ``layer`` to feature map ``f``; ``sparse`` skips all-zero kernel taps.

    Slices beyond the scale set contribute zero.  Output slices whose input
    slice is invalid are left at zero and stay invalid.
    """
    if f.scale_set != layer.basis.scale_set:
        raise ConfigurationError("feature map and layer basis live on different scale sets")
    B, C, S, H, W = f.shape
    if C != layer.in_channels:
        raise ConfigurationError(f"input has {C} channels, layer expects {layer.in_channels}")
    circular = layer.boundary is BoundaryMode.CIRCULAR
    out = np.zeros((B, layer.out_channels, S, H, W))
    for sigma, K in enumerate(layer.kernels()):
        if not f.valid[sigma]:
            continue  # invalid slices stay zero
        Q = min(layer.extent, S - sigma)
        k = K.shape[-1]
        if circular and k > H:
            raise SizeError(f"kernel side {k} larger than feature side {H} at scale {sigma}")
        x = f.values[:, :, sigma:sigma + Q].reshape(B, C * Q, H, W)
        KK = K[:, :, :Q].reshape(layer.out_channels, C * Q, k, k)
        dy, dx, w = _kernels.kernel_taps(KK, sparse=sparse)
        out[:, :, sigma] = _kernels.correlate_taps(x, dy, dx, w, circular, backend=backend)
    return ScaleFeatureMap(out, f.scale_set, f.valid.copy())


@dataclass(eq=False)
class RandomNetwork:
    layers: list
    nonlinearity: Nonlinearity = Nonlinearity.RELU
    seed: int = None

    def __post_init__(self):
        self.nonlinearity = Nonlinearity(self.nonlinearity)
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_channels != b.in_channels:
                raise ConfigurationError("channel counts of consecutive layers do not chain")

    def __call__(self, f, sparse=True):
        for i, layer in enumerate(self.layers):
            f = scale_convolve(f, layer, sparse=sparse)
            if i < len(self.layers) - 1 and self.nonlinearity is Nonlinearity.RELU:
                f = ScaleFeatureMap(np.maximum(f.values, 0.0), f.scale_set, f.valid)
        return f


def random_layer(basis, in_channels, out_channels, extent, rng, boundary=BoundaryMode.CIRCULAR):
    """Layer with weights ~ N(0, 1 / (in_channels * J * Q))."""
    J = basis.num_functions
    std = 1.0 / np.sqrt(in_channels * J * extent)
    w = rng.normal(0.0, std, size=(out_channels, in_channels, extent, J))
    return ScaleConvLayer(basis, w, boundary)


def random_network(basis, num_layers, channels, extent=2, nonlinearity="relu", seed=0,
                   in_channels=1, boundary=BoundaryMode.CIRCULAR):
    rng = np.random.default_rng(seed)
    extent = min(extent, basis.num_scales)
    layers = []
    c_in = in_channels
    for _ in range(num_layers):
        layers.append(random_layer(basis, c_in, channels, extent, rng, boundary))
        c_in = channels
    return RandomNetwork(layers, nonlinearity, seed)


def synthetic_images(count, size, seed, blobs=6, sigma=(1.5, 4.0)):
    """Smooth periodic test images: sums of random Gaussian blobs."""
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    out = np.zeros((count, size, size))
    for i in range(count):
        for _ in range(blobs):
            cy, cx = rng.uniform(0, size, 2)
            s = rng.uniform(*sigma)
            amp = rng.normal()
            dy = (yy - cy + size / 2) % size - size / 2
            dx = (xx - cx + size / 2) % size - size / 2
            out[i] += amp * np.exp(-(dy ** 2 + dx ** 2) / (2 * s * s))
    return out
