import numpy as np
import pytest

from ssmma.kernels import GridSpec
from ssmma.quadrature import LinearCombination, cf_exponent
from ssmma.simulator import (discretize_measure, parse_times, read_binary, read_csv,
                             sample_paths, write_binary, write_csv)
from ssmma.stable import empirical_cf


@pytest.fixture(scope="module")
def small_ens(lfsm):
    grid = GridSpec.for_kernel(lfsm, 2, u_window=10.0, u_step=0.1)
    return sample_paths(lfsm, [0.0, 0.5, 1.0], 300, grid, seed=4)


def test_parse_times():
    np.testing.assert_allclose(parse_times("0:0.1:2"), np.arange(21) * 0.1)
    np.testing.assert_allclose(parse_times("0:0.3:1.0"), [0.0, 0.3, 0.6, 0.9])
    np.testing.assert_allclose(parse_times("1, 2.5"), [1.0, 2.5])
    for bad in ("0:0:1", "1:0.1:0", "0:1"):
        with pytest.raises(ValueError):
            parse_times(bad)


def test_discretize_measure(lfsm):
    grid = GridSpec.for_kernel(lfsm, 4, u_window=2.0, u_step=0.5)
    dm = discretize_measure(grid, 1.5, extend_cells=1)
    assert dm.u.size == 10
    assert dm.total_mass == pytest.approx(2 * 2.0 * 1.0 + 2 * 0.5)


def test_shape_and_zero_column(small_ens):
    assert small_ens.values.shape == (300, 3)
    assert np.all(small_ens.at(0.0) == 0.0)
    with pytest.raises(KeyError):
        small_ens.at(0.7)


def test_discretised_exponent_tracks_quadrature(small_ens):
    # the discretised model includes geometric tail cells, so it stays close
    assert small_ens.cf_discrete[2] == pytest.approx(small_ens.cf_target[2], rel=5e-3)
    assert small_ens.discrete_cf_exponent([0.0, 0.0, 1.0]) == pytest.approx(
        small_ens.cf_discrete[2], rel=1e-12)


def test_deterministic_and_thread_independent(lfsm):
    grid = GridSpec.for_kernel(lfsm, 2, u_window=5.0, u_step=0.1)
    a = sample_paths(lfsm, [1.0], 50, grid, seed=1, cf_target=False)
    b = sample_paths(lfsm, [1.0], 50, grid, seed=1, n_jobs=3, cell_chunk=17, cf_target=False)
    c = sample_paths(lfsm, [1.0], 50, grid, seed=2, cf_target=False)
    assert np.allclose(a.values, b.values, rtol=1e-12, atol=1e-12)
    assert a.values.tobytes() == sample_paths(lfsm, [1.0], 50, grid, seed=1,
                                              cf_target=False).values.tobytes()
    assert not np.allclose(a.values, c.values)


def test_other_times_change_only_the_refinement(lfsm):
    # sub-cells near singular points depend on every requested time; the
    # discretised law of a column must not
    grid = GridSpec.for_kernel(lfsm, 2, u_window=5.0, u_step=0.1)
    one = sample_paths(lfsm, [1.0], 40, grid, seed=3, cf_target=False)
    two = sample_paths(lfsm, [0.5, 1.0], 40, grid, seed=3, cf_target=False)
    assert two.cf_discrete[1] == pytest.approx(one.cf_discrete[0], rel=1e-3)


def test_refinement_keeps_combinations_linear(lfsm):
    grid = GridSpec.for_kernel(lfsm, 2, u_window=10.0, u_step=0.1)
    ens = sample_paths(lfsm, [0.5, 1.0, 1.5], 20, grid, seed=0)
    # X(1.5) - X(1) has the law of X(0.5) up to discretisation error
    assert ens.discrete_cf_exponent([0.0, -1.0, 1.0]) == pytest.approx(
        ens.discrete_cf_exponent([1.0, 0.0, 0.0]), rel=2e-3)


def test_window_too_narrow(lfsm):
    grid = GridSpec.for_kernel(lfsm, 2, u_window=1.0, u_step=0.1)
    with pytest.raises(ValueError):
        sample_paths(lfsm, [2.0], 10, grid, seed=0)


def test_marginal_cf(lfsm):
    grid = GridSpec.for_kernel(lfsm, 4)
    ens = sample_paths(lfsm, [1.0], 4000, grid, seed=9)
    target = ens.cf_target[0]
    assert target == pytest.approx(cf_exponent(lfsm, LinearCombination((1.0,), (1.0,)), grid))
    for th in (0.5, 1.0):
        assert abs(empirical_cf(ens.at(1.0), th) - np.exp(-target * th ** 1.5)) < 0.04


def test_csv_and_binary_roundtrip(tmp_path, small_ens):
    write_csv(small_ens, tmp_path / "p.csv", ["seed = 4"])
    times, values = read_csv(tmp_path / "p.csv")
    np.testing.assert_array_equal(times, small_ens.times)
    np.testing.assert_array_equal(values, small_ens.values)
    write_binary(small_ens, tmp_path / "p.bin")
    times, values, seed = read_binary(tmp_path / "p.bin")
    assert seed == 4
    np.testing.assert_array_equal(values, small_ens.values)
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + bytes(28))
    with pytest.raises(ValueError):
        read_binary(tmp_path / "bad.bin")
