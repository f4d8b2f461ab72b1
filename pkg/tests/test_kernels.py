import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssmma._validation import ParameterError
from ssmma.kernels import (REGISTRY, FiniteSet, GridSpec, Interval, KernelSpec, PathSample,
                           increment_kernel, make_dissipative_synthetic, make_fourth_kind,
                           make_lfsm_periodic_concat, make_mixed_lfsm, make_periodic_example,
                           make_zero_kernel, restrict, rotation_flow, with_flow)
from ssmma.wpaths import WProcessSpec


def test_interval_midpoints():
    x, w = Interval(0.0, 2.0).nodes(4)
    np.testing.assert_allclose(x, [0.25, 0.75, 1.25, 1.75])
    np.testing.assert_allclose(w, 0.5)
    with pytest.raises(ParameterError):
        Interval(1.0, 1.0)


def test_finite_set_validation():
    with pytest.raises(ParameterError):
        FiniteSet([0.0, 1.0], [1.0, -1.0])
    fs = FiniteSet([0.0, 1.0], [0.25, 0.75])
    assert fs.mass == 1.0


def test_path_sample_interpolation():
    paths = np.array([[0.0, 1.0, 4.0], [1.0, 1.0, 1.0]])
    ps = PathSample(paths, np.array([-1.0, 0.0, 1.0]))
    assert ps.values(0, 0.5) == pytest.approx(2.5)
    assert ps.values(0, 7.0) == pytest.approx(4.0)  # held constant outside
    np.testing.assert_allclose(ps.values(np.array([0, 1]), -0.5), [0.5, 1.0])
    with pytest.raises(IndexError):
        ps.values(2, 0.0)


def test_lfsm_values():
    k = make_mixed_lfsm(1.0, 2.0, 1.5, 0.5)
    assert k.kappa == pytest.approx(-1 / 6)
    np.testing.assert_allclose(k.G(0.5, np.array([4.0, -4.0, 0.0])),
                               [4 ** (-1 / 6), 2 * 4 ** (-1 / 6), 0.0])
    assert k.tail_at(0.3) == pytest.approx((1 + 1 / 6) * 1.5)


def test_lfsm_increment_is_stable_far_out():
    k = make_mixed_lfsm(1.0, 0.0, 1.5, 0.5)
    u = 1e12
    # (1+u)^k - u^k = u^k ((1 + 1/u)^k - 1) ~ k u^(k-1)
    assert k.increment_at(0.5, 1.0, u) == pytest.approx(k.kappa * u ** (k.kappa - 1), rel=1e-6)


def test_lfsm_log_branch():
    k = make_mixed_lfsm(1.0, 0.5, 1.5, 2 / 3)
    assert k.params["branch"] == "log"
    assert k.G(0.1, math.e) == pytest.approx(1.5)
    assert k.G(0.1, -math.e) == pytest.approx(1.0)
    assert k.G(0.1, 0.0) == 0.0
    forced = make_mixed_lfsm(1.0, 0.0, 1.5, 0.5, force_branch="log")
    assert forced.params["branch"] == "log"


def test_lfsm_parameter_errors():
    with pytest.raises(ParameterError):
        make_mixed_lfsm(alpha=2.5)
    with pytest.raises(ParameterError):
        make_mixed_lfsm(hurst=1.0)
    with pytest.raises(ParameterError):
        make_mixed_lfsm(force_branch="other")
    with pytest.raises(ParameterError):
        make_mixed_lfsm(F1=float("nan"))


def test_lfsm_callable_coefficients():
    k = make_mixed_lfsm(lambda x: 1 + x, lambda x: 2 - x, 1.5, 0.5)
    assert k.G(0.5, 1.0) == pytest.approx(1.5)
    assert k.G(0.5, -1.0) == pytest.approx(1.5)


def test_periodic_values_and_breakpoints(periodic):
    assert periodic.G(0.0, 1.0) == 1.0
    assert periodic.G(0.0, math.exp(0.7)) == 0.0
    assert periodic.G(0.3, -1.0) == 0.0
    jumps, singular = periodic.breakpoints(0.2, 0.5, 10.0)
    k = 2 * (np.log(jumps) + 0.2)
    np.testing.assert_allclose(k, np.round(k), atol=1e-9)
    assert np.all((jumps >= 0.5) & (jumps <= 10.0))
    assert singular.tolist() == [0.0]
    assert periodic.tail_at(0.1) == pytest.approx(1.25)


def test_periodic_rejects_nonnegative_kappa():
    with pytest.raises(ParameterError):
        make_periodic_example(1.5, 0.8)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(0.0, 0.999), u=st.floats(1e-3, 1e3))
def test_periodic_log_period(periodic, x, u):
    phase = (x + math.log(u)) % 1.0
    if min(abs(phase - 0.5), phase, 1.0 - phase) < 1e-9:
        return  # on a jump; rounding decides the side
    lhs = periodic.G(x, math.e * u)
    assert lhs == pytest.approx(math.e ** periodic.kappa * periodic.G(x, u), rel=1e-12)


def test_fourth_kind_structure():
    k = make_fourth_kind(WProcessSpec(), 1.5, 0.3, n_paths=5, seed=1)
    assert k.space.n_paths == 5
    assert k.tail_at(0) == pytest.approx((1 - (0.3 - 1 / 1.5)) * 1.5)
    u = np.array([0.5, 2.0])
    np.testing.assert_allclose(k.G(2, u), u ** k.kappa * k.space.values(2, np.log(u)))
    assert k.G(2, 0.0) == 0.0
    assert np.array_equal(k.G(1, -u), k.G(1, u))
    with pytest.raises(ParameterError):
        make_fourth_kind(WProcessSpec(), 1.5, 0.5)


def test_fourth_kind_is_seeded():
    a = make_fourth_kind(n_paths=3, seed=4)
    b = make_fourth_kind(n_paths=3, seed=4)
    assert np.array_equal(a.space.paths, b.space.paths)


def test_dissipative():
    k = make_dissipative_synthetic()
    assert k.G(0.2, -1.0) == pytest.approx(math.exp(-1))
    assert k.flow is None


def test_concat_routes_to_parts():
    k = make_lfsm_periodic_concat()
    lf, per = make_mixed_lfsm(1.0, 2.0), make_periodic_example()
    u = np.linspace(-3, 3, 13)
    np.testing.assert_array_equal(k.G(0.25, u), lf.G(0.25, u))
    np.testing.assert_array_equal(k.G(1.25, u), per.G(0.25, u))
    assert k.tail_at(1.5) == per.tail_at(0.5)
    x, w = k.nodes(4)
    np.testing.assert_allclose(x, [0.25, 0.75, 1.25, 1.75])
    assert k.flow is not None


def test_restrict_zeroes_density(lfsm):
    r = restrict(lfsm, lambda x: x < 0.5)
    np.testing.assert_array_equal(r.density(np.array([0.25, 0.75])), [1.0, 0.0])
    assert r.G is lfsm.G


def test_increment_kernel(lfsm):
    inc = increment_kernel(lfsm, 2.0)
    assert inc(0.1, 0.5) == pytest.approx(lfsm.G(0.1, 2.5) - lfsm.G(0.1, 0.5))
    assert "t=2.0" in repr(inc)
    with pytest.raises(ValueError):
        increment_kernel(lfsm, float("inf"))


def test_zero_and_with_flow():
    z = make_zero_kernel()
    assert not np.any(z.G(0.5, np.linspace(-1, 1, 5)))
    assert with_flow(z, rotation_flow()).flow.label == "rotation"


def test_grid_spec():
    k = make_periodic_example()
    g = GridSpec.for_kernel(k, 8, u_window=10.0, u_step=0.5)
    u = g.u_nodes()
    assert u.size == 40 and not np.any(u == 0.0)
    assert g.matches(GridSpec.for_kernel(k, 8, u_window=10.0, u_step=0.5))
    assert not g.matches(g.with_options(u_window=20.0))
    with pytest.raises(ValueError):
        GridSpec(np.array([0.5]), np.array([1.0]), u_window=1.0, u_step=2.0)
    with pytest.raises(ValueError):
        GridSpec(np.array([0.5]), np.array([-1.0]))


def test_registry_builds_every_kernel():
    for name, make in REGISTRY.items():
        kw = {"n_paths": 2} if name == "fourth-kind" else {}
        k = make(**kw)
        assert isinstance(k, KernelSpec)
        assert k.label == name
