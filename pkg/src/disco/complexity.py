"""Multiply-accumulate counts and timings for dense vs sparse multi-scale kernels.

Interpolating a ``W x W`` kernel to ``N_s`` scales with step ``sigma``
costs about ``W^2 (1 + sigma^2 + ... + sigma^(2 N_s - 2))`` MACs per output
position, against ``N_s W^2`` when only the nonzero taps of dilated kernels
are evaluated.  The leading-order ratio is ``sigma^(2 N_s) / N_s``.
"""
import statistics
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .basis import build_basis
from .errors import DomainError
from .scales import Scale, ScaleSet
from .solve import SolveConfig


def _exact(scale):
    return scale.as_fraction() if scale.is_rational() else float(scale)


def _num(x):
    """JSON-friendly number: ints stay ints, other fractions become floats."""
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    return x


def dense_macs(step, count, size):
    """``W^2 * sum_k step^(2k)``, exact when ``step**2`` is rational."""
    step = step if isinstance(step, Scale) else Scale.parse(step)
    return size * size * sum(_exact(step ** (2 * k)) for k in range(count))


def sparse_macs(count, size):
    return count * size * size


def analytic_ratio(step, count):
    """``step^(2 N_s) / N_s``; ``2^N_s / N_s`` for ``step = sqrt2``."""
    step = step if isinstance(step, Scale) else Scale.parse(step)
    return _exact(step ** (2 * count)) / count


@dataclass
class ComplexityProfile:
    num_scales: int
    step: str
    size: int
    dense_macs: object
    sparse_macs: int
    analytic_ratio: object
    spatial: int = 0
    channels: int = 0
    repeats: int = 0
    kernel_sizes: list = field(default_factory=list)
    dense_taps: int = 0             # taps evaluated by the dense loop, summed over scales
    sparse_taps: int = 0            # taps left after skipping zeros
    dense_seconds: float = None     # median per forward pass
    sparse_seconds: float = None
    backend: str = None

    @property
    def mac_ratio(self):
        return self.dense_macs / self.sparse_macs

    @property
    def measured_speedup(self):
        if not self.dense_seconds or not self.sparse_seconds:
            return None
        return self.dense_seconds / self.sparse_seconds

    def to_dict(self):
        return {
            "num_scales": self.num_scales,
            "step": self.step,
            "size": self.size,
            "dense_macs": _num(self.dense_macs),
            "sparse_macs": self.sparse_macs,
            "mac_ratio": _num(Fraction(self.dense_macs) / self.sparse_macs
                              if isinstance(self.dense_macs, (int, Fraction)) else self.mac_ratio),
            "analytic_ratio": _num(self.analytic_ratio),
            "analytic_ratio_exact": str(self.analytic_ratio) if isinstance(self.analytic_ratio, Fraction) else None,
            "spatial": self.spatial,
            "channels": self.channels,
            "repeats": self.repeats,
            "kernel_sizes": list(self.kernel_sizes),
            "dense_taps": self.dense_taps,
            "sparse_taps": self.sparse_taps,
            "dense_seconds": self.dense_seconds,
            "sparse_seconds": self.sparse_seconds,
            "measured_speedup": self.measured_speedup,
            "backend": self.backend,
        }


def analytic_profile(step, count, size):
    step = step if isinstance(step, Scale) else Scale.parse(step)
    if count < 1:
        raise DomainError("need at least one scale")
    return ComplexityProfile(
        num_scales=count, step=str(step), size=size,
        dense_macs=dense_macs(step, count, size),
        sparse_macs=sparse_macs(count, size),
        analytic_ratio=analytic_ratio(step, count),
    )


def _median_times(fns, repeats):
    """Median wall time of each callable; runs are interleaved so drift hits all equally."""
    for fn in fns:
        fn()  # warmup, also triggers JIT compilation
    times = [[] for _ in fns]
    for _ in range(repeats):
        for fn, ts in zip(fns, times):
            t0 = time.perf_counter()
            fn()
            ts.append(time.perf_counter() - t0)
    return [statistics.median(ts) for ts in times]


def time_forward(basis, spatial, channels=4, repeats=5, seed=0, backend=None):
    """Median seconds of one per-scale convolution pass, dense vs zero-skipping taps.

    Each scale slot convolves a ``channels``-channel ``spatial x spatial``
    map with random combinations of its basis functions.  The dense loop
    evaluates every tap of the slot's kernel; the sparse loop only taps
    that are nonzero for some channel pair.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((1, channels, spatial, spatial))
    jobs = {True: [], False: []}
    for funcs in basis.functions:
        w = rng.standard_normal((channels, channels, basis.num_functions))
        K = np.tensordot(w, funcs, axes=([-1], [0]))
        for sparse in (True, False):
            jobs[sparse].append(_kernels.kernel_taps(K, sparse=sparse))

    def run(sparse):
        for dy, dx, w in jobs[sparse]:
            _kernels.correlate_taps(x, dy, dx, w, True, backend=backend)

    dense_t, sparse_t = _median_times([lambda: run(False), lambda: run(True)], repeats)
    taps = {s: sum(len(dy) for dy, _, _ in jobs[s]) for s in jobs}
    return dense_t, sparse_t, taps[False], taps[True]


def profile(step, count, size, spatial=64, channels=4, repeats=7, seed=0, backend=None, basis=None):
    """Analytic counts plus measured timings on a DISCO basis for ``count`` scales of ``step``.

    The timing basis is solved with a small sample budget; only its zero
    pattern matters here.
    """
    prof = analytic_profile(step, count, size)
    if basis is None:
        ss = ScaleSet.geometric(step, count, size)
        basis = build_basis(ss, SolveConfig(seed=seed, num_samples=256))
    d, s, dt, st = time_forward(basis, spatial, channels, repeats, seed, backend)
    prof.spatial, prof.channels, prof.repeats = spatial, channels, repeats
    prof.kernel_sizes = list(basis.scale_set.kernel_sizes)
    prof.dense_seconds, prof.sparse_seconds = d, s
    prof.dense_taps, prof.sparse_taps = dt, st
    prof.backend = _kernels.resolve(backend)
    return prof
