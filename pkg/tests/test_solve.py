import numpy as np
import pytest

from disco.basis import build_general_basis, pixel_basis
from disco.errors import ConfigurationError, DomainError, NumericalError
from disco.grid import dilate
from disco.scales import Scale, ScaleSet
from disco.solve import (
    SolveConfig,
    _Problem,
    choose_sample_size,
    fit_general,
    fit_intermediate,
    objective_value,
    solve_general,
    solve_intermediate,
    solve_quadratic,
)
from helpers import rel

SQRT2 = Scale.parse("sqrt2")
P = pixel_basis(3)
D = np.stack([dilate(p, 2) for p in P])


def exact_cfg(**kw):
    return SolveConfig(seed=0, sample_size=24, expectation="analytic", **kw)


def test_config_validation_and_round_trip():
    cfg = SolveConfig(seed=5, method="gd", interp="bilinear", boundary="zero")
    assert SolveConfig.from_dict(cfg.to_dict()) == cfg
    for bad in (dict(num_samples=0), dict(gd_steps=-1), dict(gd_rate=0.0), dict(gd_rate=2.0)):
        with pytest.raises(DomainError):
            SolveConfig(seed=0, **bad)


def test_sample_size_choice():
    assert choose_sample_size([SQRT2], 5) == 24
    n = choose_sample_size([Scale.parse("2"), SQRT2], 5)
    assert n % 2 == 0
    with pytest.raises(DomainError):
        choose_sample_size([Scale.parse("7")], 1)


def test_integer_factor_recovers_dilation():
    for cfg in (exact_cfg(), SolveConfig(seed=0, num_samples=256)):
        b = build_general_basis(ScaleSet.parse("1,2", 3), cfg, fix_integer=False)
        assert np.abs(b.functions[1] - D).max() < 1e-6


def test_zero_kernels_give_zero():
    out = solve_intermediate(np.zeros((3, 3)), np.zeros((5, 5)), 5, exact_cfg())
    assert out.shape == (5, 5)
    assert np.abs(out).max() < 1e-12


def test_center_delta_is_fixed_point():
    out = solve_intermediate(P[4], D[4], 5, exact_cfg())
    expected = np.zeros((5, 5))
    expected[2, 2] = 1.0
    np.testing.assert_allclose(out, expected, atol=1e-8)


def test_objective_bounds():
    res = fit_intermediate(P, D, 5, exact_cfg())
    assert res.kernels[1].shape == (9, 5, 5)
    assert np.all(res.objective <= res.initial_objective + 1e-9)
    assert np.all(res.objective <= res.zero_objective + 1e-9)
    assert np.all(res.objective > -1e-9)


def test_solver_objective_matches_direct_oracle():
    cfg = SolveConfig(seed=3, num_samples=32, sample_size=24)
    res = fit_intermediate(P[:2], D[:2], 5, cfg)
    pairs = [(0, 1, SQRT2), (1, 2, SQRT2)]
    for j in range(2):
        direct = objective_value(pairs, {0: P[j], 1: res.kernels[1][j], 2: D[j]}, cfg, 24)
        assert rel(res.objective[j], direct) < 1e-10


def test_monte_carlo_gram_approaches_analytic():
    sizes, pairs = [3, 5, 5], [(0, 1, SQRT2), (1, 2, SQRT2)]
    Ga = _Problem(sizes, pairs, exact_cfg(), 24).gram_analytic()
    errs = []
    for n in (64, 1024):
        cfg = SolveConfig(seed=1, num_samples=n, sample_size=24)
        errs.append(np.linalg.norm(_Problem(sizes, pairs, cfg, 24).gram_monte_carlo() - Ga) / np.linalg.norm(Ga))
    assert errs[1] < errs[0] and errs[1] < 0.05
    assert np.linalg.eigvalsh(Ga).min() > -1e-9


def test_monte_carlo_kernel_close_to_analytic():
    ra = fit_intermediate(P, D, 5, exact_cfg())
    rm = fit_intermediate(P, D, 5, SolveConfig(seed=3, num_samples=1024, sample_size=24))
    assert rel(rm.kernels[1], ra.kernels[1]) < 0.02


def test_gd_matches_normal_equations():
    ne = solve_intermediate(P, D, 5, exact_cfg())
    gd = solve_intermediate(P, D, 5, exact_cfg(method="gd"))
    assert rel(gd, ne) < 1e-3


def test_gd_history_non_increasing():
    res = fit_intermediate(P, D, 5, exact_cfg(method="gd", gd_steps=1000))
    steps, values = zip(*res.history)
    assert steps[0] == 0 and steps[-1] == 1000
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_gd_zero_steps_returns_initializer():
    res = fit_intermediate(P, D, 5, exact_cfg(method="gd", gd_steps=0))
    np.testing.assert_allclose(res.objective, res.initial_objective)


def test_ill_conditioned_system_raises():
    G = np.diag([1.0, 1e-20])
    with pytest.raises(NumericalError):
        solve_quadratic(G, np.array([0, 1]), np.zeros((0, 1)), exact_cfg(ridge=0.0))


def test_input_checks():
    with pytest.raises(DomainError):
        fit_intermediate(P, D, 4, exact_cfg())
    with pytest.raises(ConfigurationError):
        fit_intermediate(P, D[:3], 5, exact_cfg())
    with pytest.raises(DomainError):
        fit_intermediate(P, D, 5, exact_cfg().replace(sample_size=8))


def test_general_two_scale_integer_is_dilation():
    out = solve_general(ScaleSet.parse("1,2", 3), P, exact_cfg())
    assert np.array_equal(out[0], P)
    assert np.abs(out[1] - D).max() < 1e-6


def test_general_single_scale_returns_seeds():
    out = solve_general(ScaleSet.parse("1", 3), P, exact_cfg())
    assert len(out) == 1 and np.array_equal(out[0], P)


def test_general_with_fixed_integer_equals_intermediate_fit():
    ss = ScaleSet.parse("1,sqrt2,2", 3)
    cfg = SolveConfig(seed=7, num_samples=256, sample_size=24)
    joint = fit_general(ss, P, cfg, fixed={2: D})
    single = fit_intermediate(P, D, 5, cfg)
    np.testing.assert_allclose(joint.kernels[1], single.kernels[1], atol=1e-9)


def test_general_seed_size_checked():
    with pytest.raises(ConfigurationError):
        fit_general(ScaleSet.parse("1,2", 3), np.zeros((25, 5, 5)), exact_cfg())
