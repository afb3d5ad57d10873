"""Multi-scale kernel bases: pixel basis, dilation, optimized intermediate scales.

A basis holds ``J = W**2`` functions on every scale of a
:class:`~disco.scales.ScaleSet`.  Slot ``s`` is a ``(J, k_s, k_s)`` array.
Trainable kernels are ``kernel_s = sum_j psi[s][j] * w[j]`` with weights
shared across scales.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, DomainError, SizeError
from .grid import dilate, embed_center
from .resample import InterpMethod, interpolate_kernel
from .scales import ScaleSet
from .solve import SolveConfig, fit_general, fit_intermediate


class Provenance(str, Enum):
    PIXEL = "Pixel"
    DILATED = "Dilated"
    OPTIMIZED = "Optimized"
    INTERPOLATED = "Interpolated"


@dataclass(eq=False)
class MultiScaleBasis:
    functions: list          # per scale: (J, k, k) array
    scale_set: ScaleSet
    provenance: list         # per scale: Provenance (shared by all functions)
    config: SolveConfig = None
    objectives: dict = field(default_factory=dict)  # slot -> (J,) objective after solving
    label: str = "disco"

    def __post_init__(self):
        self.functions = [np.asarray(f, dtype=np.float64) for f in self.functions]
        self.provenance = [Provenance(p) for p in self.provenance]
        J = self.scale_set.smallest_size ** 2
        if len(self.functions) != len(self.scale_set) or len(self.provenance) != len(self.scale_set):
            raise SizeError("one slot and one provenance entry per scale required")
        for f, k in zip(self.functions, self.scale_set.kernel_sizes):
            if f.shape != (J, k, k):
                raise SizeError(f"slot shape {f.shape} != ({J}, {k}, {k})")
            if not np.all(np.isfinite(f)):
                raise DomainError("basis has non-finite entries")

    @property
    def num_functions(self):
        return self.functions[0].shape[0]

    @property
    def num_scales(self):
        return len(self.functions)

    def tensor(self):
        """Pack into ``(num_functions, num_scales, k_max, k_max)``, slots centered."""
        kmax = max(self.scale_set.kernel_sizes)
        out = np.zeros((self.num_functions, self.num_scales, kmax, kmax))
        for s, f in enumerate(self.functions):
            for j in range(self.num_functions):
                out[j, s] = embed_center(f[j], kmax)
        return out

    def nonzero_taps(self, s):
        """Number of taps where some function of slot ``s`` is nonzero."""
        return int(np.count_nonzero(np.any(self.functions[s] != 0.0, axis=0)))


def pixel_basis(size):
    """``size**2`` one-hot kernels, the ``j``-th with its 1 at row-major position ``j``."""
    if int(size) != size or size < 1 or size % 2 == 0:
        raise DomainError(f"pixel basis size must be odd and positive, got {size}")
    size = int(size)
    return np.eye(size * size).reshape(size * size, size, size)


def _check_size(smallest_size, scale_set):
    if smallest_size is not None and smallest_size != scale_set.smallest_size:
        raise ConfigurationError(
            f"smallest_size {smallest_size} != scale set's {scale_set.smallest_size}")


def _roots(scale_set):
    """Non-integer slots that are not an integer multiple of an earlier non-integer slot."""
    roots = []
    for k, is_int in enumerate(scale_set.integer_ratio):
        if is_int:
            continue
        if not any(scale_set.ratio(k, r).is_integer() for r in roots):
            roots.append(k)
    return roots


def disco_feasible(scale_set):
    """True when dilation plus a single intermediate solve covers ``scale_set``."""
    roots = _roots(scale_set)
    if not roots:
        return True
    return len(roots) == 1 and (scale_set.step ** 2).is_integer()


def build_disco_basis(smallest_size, scale_set, cfg):
    """Pixel basis at ``s0``, dilation on integer ratios, one optimized intermediate slot.

    The first non-integer scale ``r`` is fitted between ``psi_{r-1}`` and
    ``dilate(psi_{r-1}, step**2)``; later non-integer scales dilate it.
    Scale sets needing more than one independent intermediate solve are
    rejected (use :func:`build_general_basis`).
    """
    _check_size(smallest_size, scale_set)
    if not disco_feasible(scale_set):
        raise ConfigurationError(
            f"{scale_set!r} has several independent non-integer scales; use build_general_basis")
    W = scale_set.smallest_size
    base = pixel_basis(W)
    n = len(scale_set)
    functions = [None] * n
    provenance = [None] * n
    objectives = {}
    for k in range(n):
        r = scale_set.ratio(k)
        if r.is_integer():
            functions[k] = base if k == 0 else np.stack([dilate(p, r.as_int()) for p in base])
            provenance[k] = Provenance.PIXEL if k == 0 else Provenance.DILATED
    roots = _roots(scale_set)
    if roots:
        (root,) = roots
        step = scale_set.step
        lower = functions[root - 1]
        upper = np.stack([dilate(p, (step ** 2).as_int()) for p in lower])
        res = fit_intermediate(lower, upper, scale_set.kernel_sizes[root], cfg, step=step)
        functions[root] = res.kernels[1]
        provenance[root] = Provenance.OPTIMIZED
        objectives[root] = res.objective
        for k in range(root + 1, n):
            if functions[k] is None:
                m = scale_set.ratio(k, root).as_int()
                functions[k] = np.stack([dilate(p, m) for p in functions[root]])
                provenance[k] = Provenance.DILATED
    return MultiScaleBasis(functions, scale_set, provenance, config=cfg, objectives=objectives)


def build_general_basis(scale_set, cfg, fix_integer=True):
    """Joint fit of every non-pixel slot (arbitrary scale steps).

    With ``fix_integer`` the integer-ratio slots are pinned to their exact
    dilations and only the remaining slots are optimized.
    """
    W = scale_set.smallest_size
    base = pixel_basis(W)
    fixed = {}
    if fix_integer:
        for k in range(1, len(scale_set)):
            r = scale_set.ratio(k)
            if r.is_integer():
                fixed[k] = np.stack([dilate(p, r.as_int()) for p in base])
    if len(scale_set) == 1:
        return MultiScaleBasis([base], scale_set, [Provenance.PIXEL], config=cfg)
    res = fit_general(scale_set, base, cfg, fixed=fixed)
    functions, provenance = [base], [Provenance.PIXEL]
    for k in range(1, len(scale_set)):
        if k in fixed:
            functions.append(fixed[k])
            provenance.append(Provenance.DILATED)
        else:
            functions.append(res.kernels[k])
            provenance.append(Provenance.OPTIMIZED)
    objectives = {k: res.objective for k in res.kernels}
    return MultiScaleBasis(functions, scale_set, provenance, config=cfg, objectives=objectives)


def build_basis(scale_set, cfg):
    """:func:`build_disco_basis` when feasible, otherwise :func:`build_general_basis`."""
    if disco_feasible(scale_set):
        return build_disco_basis(None, scale_set, cfg)
    return build_general_basis(scale_set, cfg)


def build_interp_baseline(smallest_size, scale_set, method=InterpMethod.BILINEAR):
    """Pixel basis rescaled by interpolation to each scale, amplitude ``1/s**2``."""
    _check_size(smallest_size, scale_set)
    base = pixel_basis(scale_set.smallest_size)
    functions = []
    for k, size in enumerate(scale_set.kernel_sizes):
        s = float(scale_set.ratio(k))
        functions.append(np.stack([interpolate_kernel(p, s, size, method) for p in base]))
    prov = [Provenance.INTERPOLATED] * len(scale_set)
    return MultiScaleBasis(functions, scale_set, prov, label=f"interp-{InterpMethod.coerce(method).value}")


def kernels_from_weights(basis, w):
    """Per-scale kernels ``sum_j psi[s][j] * w[..., j]``.

    ``w`` has trailing length ``J``; leading axes (channels, scale offsets)
    are carried through, so ``w`` of shape ``(O, C, Q, J)`` gives per-scale
    arrays of shape ``(O, C, Q, k, k)``.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1] != basis.num_functions:
        raise SizeError(f"weight length {w.shape[-1]} != number of basis functions {basis.num_functions}")
    return [np.tensordot(w, f, axes=([-1], [0])) for f in basis.functions]
