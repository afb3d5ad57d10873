"""Equivariance error of random scale-convolution networks and kernel constraint residuals."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grid import BoundaryMode, convolve
from .resample import InterpMethod, downscale_image
from .scaleconv import act, lift
from .solve import SolveConfig, choose_sample_size, pair_downscaler


@dataclass
class EquivarianceReport:
    per_scale: dict                # shift -> mean normalized squared error over inputs
    delta: float                   # sum of per_scale terms
    valid_slices: dict             # shift -> list of compared scale indices
    flagged: dict = field(default_factory=dict)  # shift -> count of zero-denominator inputs
    test_indices: list = field(default_factory=list)
    interp: str = "nearest"
    num_inputs: int = 0

    def to_dict(self):
        return {
            "delta": self.delta,
            "per_scale": {str(k): v for k, v in self.per_scale.items()},
            "valid_slices": {str(k): v for k, v in self.valid_slices.items()},
            "flagged": {str(k): v for k, v in self.flagged.items()},
            "test_indices": list(self.test_indices),
            "interp": self.interp,
            "num_inputs": self.num_inputs,
        }


def equivariance_error(net, inputs, scale_set, test_indices=None, interp=InterpMethod.NEAREST,
                       boundary=BoundaryMode.CIRCULAR, lift_mode="broadcast"):
    """Normalized squared discrepancy between acting before and after ``net``.

    For every shift ``n`` in ``test_indices`` (default: all representable
    shifts ``1..S-1``) and every input, compares ``act(net(F), n)`` with
    ``net(act(F, n))`` on the valid scale slices, ``F`` the lifted input.
    ``net`` is any callable on feature maps (an empty list means identity).
    """
    interp = InterpMethod.coerce(interp)
    S = len(scale_set)
    if test_indices is None:
        test_indices = list(range(1, S))
    if not test_indices:
        raise DomainError("no test indices")
    for n in test_indices:
        if not 1 <= n < S:
            raise DomainError(f"test index {n} leaves no comparable scale slice (S = {S})")
    images = np.asarray(inputs, dtype=np.float64)
    F = lift(images, scale_set, mode=lift_mode)
    phi = net if callable(net) else (lambda f: f)
    out = phi(F)
    per_scale, valid_slices, flagged = {}, {}, {}
    for n in test_indices:
        lhs = act(out, n, interp, boundary)
        rhs = phi(act(F, n, interp, boundary))
        valid = np.flatnonzero(lhs.valid & rhs.valid)
        a = lhs.values[:, :, valid]
        b = rhs.values[:, :, valid]
        num = np.sum((a - b) ** 2, axis=(1, 2, 3, 4))
        den = np.sum(a ** 2, axis=(1, 2, 3, 4))
        ok = den > 0
        flagged[n] = int(np.count_nonzero(~ok))
        per_scale[n] = float(np.mean(num[ok] / den[ok])) if np.any(ok) else 0.0
        valid_slices[n] = valid.tolist()
    return EquivarianceReport(
        per_scale=per_scale,
        delta=float(sum(per_scale.values())),
        valid_slices=valid_slices,
        flagged=flagged,
        test_indices=list(test_indices),
        interp=interp.value,
        num_inputs=int(F.shape[0]),
    )


def constraint_residuals(basis, num_samples=50, seed=0, interp=None, boundary=None, sample_size=None):
    """Per scale pair ``l < k``: ``|L[f]*psi_l - L[f*psi_k]| / |L[f]*psi_l|`` over random ``f``.

    ``L`` downscales by ``s_k / s_l``.  Returns a list of dicts with the max
    and mean of the statistic over samples and functions.
    """
    cfg = basis.config or SolveConfig(seed=seed)
    cfg = cfg.replace(
        seed=seed,
        interp=InterpMethod.coerce(interp) if interp is not None else cfg.interp,
        boundary=BoundaryMode.coerce(boundary) if boundary is not None else cfg.boundary,
    )
    ss = basis.scale_set
    pairs = [(l, k, ss.ratio(k, l)) for k in range(len(ss)) for l in range(k)]
    n = sample_size or choose_sample_size([f for _, _, f in pairs], max(ss.kernel_sizes))
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((num_samples, n, n))
    report = []
    for l, k, factor in pairs:
        L = pair_downscaler(n, factor, cfg)
        small = downscale_image(samples, L)
        stats = []
        for j in range(basis.num_functions):
            for f, fs in zip(samples, small):
                lhs = convolve(fs, basis.functions[l][j], cfg.boundary)
                rhs = downscale_image(convolve(f, basis.functions[k][j], cfg.boundary), L)
                den = np.linalg.norm(lhs)
                stats.append(np.linalg.norm(lhs - rhs) / den if den > 0 else 0.0)
        report.append({
            "small": l,
            "large": k,
            "ratio": str(factor),
            "integer_ratio": factor.is_integer(),
            "adjacent": k == l + 1,
            "max": float(np.max(stats)),
            "mean": float(np.mean(stats)),
        })
    return report
