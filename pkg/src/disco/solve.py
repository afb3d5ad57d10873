"""Least-squares fitting of multi-scale kernels to the discrete scale constraint.

For a pair of slots ``l < k`` with downscaler ``L`` by ``a**(k - l)`` the
per-sample residual is::

    r = L[f] * psi_l - L[f * psi_k]

which is linear in the stacked kernel taps.  Summing ``|r|^2`` over pairs
and averaging over white-noise ``f`` gives a homogeneous quadratic
``z^T G z`` in the taps ``z`` of every slot.  Slots held fixed move to the
right-hand side, and all basis functions share one Gram matrix.

``G`` is estimated by Monte Carlo over seeded ``N(0, 1)`` images, or
computed exactly from ``E <A f, B f> = tr(A^T B)``, which factorises over
the two image axes.
"""
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import linalg

from .errors import ConfigurationError, DomainError, NumericalError
from .grid import BoundaryMode, as_kernel, convolve
from .resample import InterpMethod, downscale_image, interpolate_kernel, make_downscale, scaled_size
from .scales import Scale

MAX_CONDITION = 1e12
_CHUNK = 128


class SolverMethod(str, Enum):
    NORMAL_EQUATIONS = "ne"
    GRADIENT_DESCENT = "gd"


class Expectation(str, Enum):
    MONTE_CARLO = "monte_carlo"
    ANALYTIC = "analytic"


@dataclass(frozen=True)
class SolveConfig:
    seed: int
    num_samples: int = 4096
    sample_size: int = None
    method: SolverMethod = SolverMethod.NORMAL_EQUATIONS
    gd_steps: int = 5000
    gd_rate: float = 0.002  # step in units of 1 / lambda_max(Hessian)
    interp: InterpMethod = InterpMethod.BICUBIC
    boundary: BoundaryMode = BoundaryMode.CIRCULAR
    expectation: Expectation = Expectation.MONTE_CARLO
    ridge: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "method", SolverMethod(self.method))
        object.__setattr__(self, "interp", InterpMethod.coerce(self.interp))
        object.__setattr__(self, "boundary", BoundaryMode.coerce(self.boundary))
        object.__setattr__(self, "expectation", Expectation(self.expectation))
        if self.num_samples < 1:
            raise DomainError("num_samples must be >= 1")
        if self.gd_steps < 0:
            raise DomainError("gd_steps must be >= 0")
        if not 0 < self.gd_rate <= 1:
            raise DomainError("gd_rate must be in (0, 1] (fraction of 1 / lambda_max)")

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {k: (v.value if isinstance(v, Enum) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class SolveResult:
    kernels: list                  # free slot index -> (J, k, k) array
    objective: np.ndarray          # (J,) objective at the solution
    initial_objective: np.ndarray  # (J,) objective at the initializer
    zero_objective: np.ndarray     # (J,) objective with free slots zeroed
    history: list = field(default_factory=list)  # GD: (step, mean objective) every 100 steps
    sample_size: int = 0
    condition: float = float("nan")


def choose_sample_size(factors, largest_kernel, span=(4, 6)):
    """Pick the white-noise image side for a set of downscaling factors.

    Searches ``[4k, 6k]`` (``k`` the largest kernel side) for the side whose
    rounded output sizes best approximate every factor; integer factors
    must divide the side exactly.
    """
    lo, hi = span[0] * largest_kernel, span[1] * largest_kernel
    best = None
    for n in range(lo, hi + 1):
        if any(f.is_integer() and n % f.as_int() for f in factors):
            continue
        err = max((abs(n / scaled_size(n, float(f)) - float(f)) / float(f) for f in factors), default=0.0)
        if best is None or err < best[0] - 1e-15:
            best = (err, n)
    if best is None:
        raise DomainError(f"no sample size in [{lo}, {hi}] is divisible by the integer factors")
    return best[1]


def pair_downscaler(n, factor, cfg):
    """Downscaler for image side ``n`` and exact factor (a :class:`Scale` > 1)."""
    n_out = n // factor.as_int() if factor.is_integer() else scaled_size(n, float(factor))
    return make_downscale(n, n_out, cfg.interp, cfg.boundary)


def _offsets(size):
    h = (size - 1) // 2
    return np.arange(-h, h + 1)


def _shift_matrix(n, d, boundary):
    """``(S f)[i] = f[i + d]`` with wrap-around or zeros."""
    S = np.zeros((n, n))
    idx = np.arange(n) + d
    if boundary is BoundaryMode.CIRCULAR:
        S[np.arange(n), idx % n] = 1.0
    else:
        ok = (idx >= 0) & (idx < n)
        S[np.arange(n)[ok], idx[ok]] = 1.0
    return S


class _Problem:
    """Slots, pairs and tap layout of one fitting problem."""

    def __init__(self, sizes, pairs, cfg, sample_size):
        self.sizes = list(sizes)
        self.pairs = pairs  # list of (l, k, factor Scale)
        self.cfg = cfg
        self.n = sample_size
        self.offsets = np.cumsum([0] + [s * s for s in self.sizes])
        self.ops = {(l, k): pair_downscaler(self.n, f, cfg) for l, k, f in pairs}

    @property
    def dim(self):
        return int(self.offsets[-1])

    def block(self, slot):
        return slice(int(self.offsets[slot]), int(self.offsets[slot + 1]))

    def op(self, l, k):
        return self.ops[(l, k)]

    # Monte Carlo ----------------------------------------------------------
    def _pair_features(self, f, l, k):
        """Stack ``[shift_t(L f) for t in psi_l] + [-L(shift_u f) for u in psi_k]``."""
        L = self.op(l, k)
        Lm = L.matrix
        m = L.n_out
        bd = self.cfg.boundary
        small = Lm @ f @ Lm.T
        feats = []
        for ty in _offsets(self.sizes[l]):
            Sy = _shift_matrix(m, ty, bd)
            rows = Sy @ small
            for tx in _offsets(self.sizes[l]):
                feats.append(rows @ _shift_matrix(m, tx, bd).T)
        A = {u: Lm @ _shift_matrix(self.n, u, bd) for u in _offsets(self.sizes[k])}
        for uy in _offsets(self.sizes[k]):
            left = A[uy] @ f
            for ux in _offsets(self.sizes[k]):
                feats.append(-(left @ A[ux].T))
        return np.stack(feats, axis=1).reshape(f.shape[0], len(feats), m * m)

    def gram_monte_carlo(self):
        cfg = self.cfg
        rng = np.random.default_rng(cfg.seed)
        samples = rng.standard_normal((cfg.num_samples, self.n, self.n))
        G = np.zeros((self.dim, self.dim))
        for l, k, _ in self.pairs:
            idx = np.r_[self.block(l), self.block(k)]
            acc = np.zeros((len(idx), len(idx)))
            for start in range(0, cfg.num_samples, _CHUNK):
                D = self._pair_features(samples[start:start + _CHUNK], l, k)
                D = D.transpose(1, 0, 2).reshape(len(idx), -1)
                acc += D @ D.T
            G[np.ix_(idx, idx)] += acc / cfg.num_samples
        return G

    # exact expectation ------------------------------------------------------
    def gram_analytic(self):
        bd = self.cfg.boundary
        G = np.zeros((self.dim, self.dim))
        for l, k, _ in self.pairs:
            Lm = self.op(l, k).matrix
            m = Lm.shape[0]
            tl = self.sizes[l]
            # per-axis factors of the 2D features, sign dropped
            ops = [_shift_matrix(m, t, bd) @ Lm for t in _offsets(tl)]
            ops += [Lm @ _shift_matrix(self.n, u, bd) for u in _offsets(self.sizes[k])]
            g = np.einsum("imn,jmn->ij", np.stack(ops), np.stack(ops))
            bl, bk = self.block(l), self.block(k)
            lk = -np.kron(g[:tl, tl:], g[:tl, tl:])
            G[bl, bl] += np.kron(g[:tl, :tl], g[:tl, :tl])
            G[bk, bk] += np.kron(g[tl:, tl:], g[tl:, tl:])
            G[bl, bk] += lk
            G[bk, bl] += lk.T
        return G

    def gram(self):
        if self.cfg.expectation is Expectation.ANALYTIC:
            return self.gram_analytic()
        return self.gram_monte_carlo()


def _objective(G, Z):
    """Per-function ``z_j^T G z_j`` for columns of ``Z``."""
    return np.einsum("ij,ij->j", Z, G @ Z)


def solve_quadratic(G, free, fixed_values, cfg, init=None):
    """Minimise ``z^T G z`` over the ``free`` entries, others fixed per column."""
    dim = G.shape[0]
    fixed = np.setdiff1d(np.arange(dim), free)
    Gff = G[np.ix_(free, free)]
    rhs = -G[np.ix_(free, fixed)] @ fixed_values
    J = fixed_values.shape[1]
    history = []
    if cfg.method is SolverMethod.NORMAL_EQUATIONS:
        A = Gff + cfg.ridge * max(np.mean(np.diag(Gff)), 1e-300) * np.eye(len(free))
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise NumericalError(f"normal equations ill-conditioned (cond ~ {cond:.3g})", cond)
        X = linalg.cho_solve(linalg.cho_factor(A), rhs)
    else:
        evals = np.linalg.eigvalsh(Gff)
        cond = evals[-1] / max(evals[0], 1e-300)
        rate = cfg.gd_rate / (2.0 * evals[-1])
        X = np.zeros((len(free), J)) if init is None else np.array(init, dtype=np.float64)
        full = np.zeros((dim, J))
        full[fixed] = fixed_values

        def obj(Xc):
            full[free] = Xc
            return float(np.mean(_objective(G, full)))

        history.append((0, obj(X)))
        for step in range(1, cfg.gd_steps + 1):
            X = X - rate * 2.0 * (Gff @ X - rhs)
            if step % 100 == 0 or step == cfg.gd_steps:
                history.append((step, obj(X)))
    return X, float(cond), history


def _fit(sizes, pairs, fixed, cfg, init, J):
    """Shared driver. ``fixed``: slot -> (J, k, k); ``init``: slot -> (J, k, k)."""
    factors = [f for _, _, f in pairs]
    n = cfg.sample_size or choose_sample_size(factors, max(sizes))
    if n < 2 * max(sizes):
        raise DomainError(f"sample_size {n} must be >= 2 * largest kernel ({max(sizes)})")
    prob = _Problem(sizes, pairs, cfg, n)
    G = prob.gram()
    free_slots = [s for s in range(len(sizes)) if s not in fixed]
    free = np.concatenate([np.arange(prob.dim)[prob.block(s)] for s in free_slots])
    fixed_idx = np.setdiff1d(np.arange(prob.dim), free)
    full = np.zeros((prob.dim, J))
    for s, ker in fixed.items():
        full[prob.block(s)] = np.asarray(ker, dtype=np.float64).reshape(J, -1).T
    fixed_values = full[fixed_idx]
    X0 = np.concatenate([np.asarray(init[s], dtype=np.float64).reshape(J, -1).T for s in free_slots])
    X, cond, history = solve_quadratic(G, free, fixed_values, cfg, init=X0)

    def objective(Xc):
        z = full.copy()
        z[free] = Xc
        return _objective(G, z)

    kernels = {}
    for s in free_slots:
        blk = prob.block(s)
        pos = np.searchsorted(free, np.arange(prob.dim)[blk])
        kernels[s] = X[pos].T.reshape(J, sizes[s], sizes[s])
    return SolveResult(
        kernels=kernels,
        objective=objective(X),
        initial_objective=objective(X0),
        zero_objective=objective(np.zeros_like(X)),
        history=history,
        sample_size=n,
        condition=cond,
    )


def _stack(kernels):
    k = np.asarray(kernels, dtype=np.float64)
    return k[None] if k.ndim == 2 else k


def fit_intermediate(psi1, psi2, target_size, cfg, step=Scale.parse("sqrt2"), init=None):
    """Fit the intermediate kernel between ``psi1`` and ``psi2 ~ dilate(psi1, step**2)``.

    ``psi1``/``psi2`` are single kernels or ``(J, k, k)`` stacks.  The
    objective per function is::

        E_f |L[f] * psi1 - L[f * psi]|^2 + |L[f] * psi - L[f * psi2]|^2

    with ``L`` downscaling by ``step``.  ``init`` (default: ``psi1``
    rescaled by ``step`` with bilinear interpolation) seeds gradient descent
    and is the reference for ``initial_objective``.
    """
    psi1, psi2 = _stack(psi1), _stack(psi2)
    for p in (psi1[0], psi2[0]):
        as_kernel(p, ndim=2)
    if psi1.shape[0] != psi2.shape[0]:
        raise ConfigurationError("psi1 and psi2 stacks have different lengths")
    if target_size % 2 == 0 or target_size < psi1.shape[-1]:
        raise DomainError(f"target size must be odd and >= {psi1.shape[-1]}, got {target_size}")
    step = step if isinstance(step, Scale) else Scale.parse(step)
    if init is None:
        init = np.stack([interpolate_kernel(p, float(step), target_size, InterpMethod.BILINEAR) for p in psi1])
    sizes = [psi1.shape[-1], target_size, psi2.shape[-1]]
    pairs = [(0, 1, step), (1, 2, step)]
    return _fit(sizes, pairs, {0: psi1, 2: psi2}, cfg, {1: _stack(init)}, psi1.shape[0])


def solve_intermediate(psi1, psi2, target_size, cfg, step=Scale.parse("sqrt2")):
    """Minimiser of the two-term intermediate objective (see :func:`fit_intermediate`)."""
    res = fit_intermediate(psi1, psi2, target_size, cfg, step=step)
    out = res.kernels[1]
    return out[0] if np.ndim(psi1) == 2 else out


def fit_general(scale_set, seeds, cfg, fixed=None, init=None):
    """Jointly fit every slot of ``scale_set`` over all pairs ``k > l``.

    Slot 0 is held at ``seeds`` (``(J, W, W)``); ``fixed`` may pin further
    slots (slot -> ``(J, k, k)``).  Pair ``(l, k)`` uses a downscaler by
    ``s_k / s_l``.  Free slots start from the bilinear rescaling of the seeds.
    """
    seeds = _stack(seeds)
    J = seeds.shape[0]
    sizes = list(scale_set.kernel_sizes)
    if seeds.shape[-1] != sizes[0]:
        raise ConfigurationError(f"seeds have side {seeds.shape[-1]}, scale set expects {sizes[0]}")
    fixed = dict(fixed or {})
    fixed[0] = seeds
    pairs = [(l, k, scale_set.ratio(k, l)) for k in range(len(sizes)) for l in range(k)]
    if init is None:
        init = {}
    init = {s: init.get(s, np.stack([interpolate_kernel(p, float(scale_set.ratio(s)), sizes[s],
                                                        InterpMethod.BILINEAR) for p in seeds]))
            for s in range(1, len(sizes)) if s not in fixed}
    return _fit(sizes, pairs, fixed, cfg, init, J)


def solve_general(scale_set, seeds, cfg, fixed=None):
    """List of ``(J, k, k)`` kernel stacks, one per scale; slot 0 is the seeds."""
    seeds = _stack(seeds)
    if len(scale_set) == 1:
        return [seeds.copy()]
    res = fit_general(scale_set, seeds, cfg, fixed=fixed)
    fixed = dict(fixed or {})
    out = []
    for s in range(len(scale_set)):
        if s == 0:
            out.append(seeds.copy())
        elif s in res.kernels:
            out.append(res.kernels[s])
        else:
            out.append(np.asarray(fixed[s], dtype=np.float64))
    return out


def objective_value(scale_pairs, kernels, cfg, sample_size):
    """Direct Monte Carlo evaluation of ``sum |L[f]*psi_l - L[f*psi_k]|^2`` (test oracle).

    ``scale_pairs`` lists ``(l, k, factor)``; ``kernels`` maps slot -> 2D kernel.
    """
    rng = np.random.default_rng(cfg.seed)
    samples = rng.standard_normal((cfg.num_samples, sample_size, sample_size))
    total = 0.0
    for f in samples:
        for l, k, factor in scale_pairs:
            L = pair_downscaler(sample_size, factor, cfg)
            lhs = convolve(downscale_image(f, L), kernels[l], cfg.boundary)
            rhs = downscale_image(convolve(f, kernels[k], cfg.boundary), L)
            total += float(np.sum((lhs - rhs) ** 2))
    return total / cfg.num_samples
