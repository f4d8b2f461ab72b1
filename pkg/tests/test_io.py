import numpy as np
import pytest

from ssmma._validation import ParameterError
from ssmma.classifier import classify_kernel
from ssmma.io import load_piecewise_kernel, read_config, read_report_csv, write_piecewise_kernel
from ssmma.kernels import GridSpec


def test_read_config(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# comment\nalpha = 1.5  # trailing\n\nx-nodes=16\n")
    assert read_config(p) == {"alpha": "1.5", "x-nodes": "16"}
    p.write_text("alpha 1.5\n")
    with pytest.raises(ValueError):
        read_config(p)


def test_piecewise_roundtrip(tmp_path):
    u = np.linspace(-2.0, 2.0, 9)
    x = [0.0, 1.0]
    vals = np.array([np.exp(-np.abs(u)), 2 * np.exp(-np.abs(u))])
    path = tmp_path / "k.txt"
    write_piecewise_kernel(path, x, u, vals, 1.5, 0.5)
    k = load_piecewise_kernel(path)
    assert k.alpha == 1.5 and k.hurst == 0.5
    np.testing.assert_allclose(k.G(1.0, u), vals[1])
    assert k.G(0.0, 0.25) == pytest.approx(0.5 * (np.exp(0) + np.exp(-0.5)))
    assert k.G(0.0, 5.0) == 0.0
    x_nodes, w = k.nodes()
    np.testing.assert_array_equal(x_nodes, x)
    np.testing.assert_allclose(w, 0.5)


def test_piecewise_nearest(tmp_path):
    path = tmp_path / "k.txt"
    write_piecewise_kernel(path, [0.0], [0.0, 1.0], [[1.0, 3.0]], 1.5, 0.5, "nearest")
    k = load_piecewise_kernel(path)
    np.testing.assert_allclose(k.G(0.0, np.array([0.2, 0.8, 1.5])), [1.0, 3.0, 0.0])


def test_piecewise_errors(tmp_path):
    p = tmp_path / "k.txt"
    p.write_text("0 0 1\n")
    with pytest.raises(ParameterError):
        load_piecewise_kernel(p)
    p.write_text("# alpha = 1.5\n# hurst = 0.5\n0 0\n")
    with pytest.raises(ValueError):
        load_piecewise_kernel(p)
    p.write_text("# alpha = 1.5\n# hurst = 0.5\n0 0 1\n0 0 2\n")
    with pytest.raises(ValueError):
        load_piecewise_kernel(p)


def test_report_roundtrip(tmp_path, periodic):
    grid = GridSpec.for_kernel(periodic, 2)
    rep = classify_kernel(periodic, grid)
    rep.write_csv(tmp_path / "r.csv", ["h = 1"])
    back = read_report_csv(tmp_path / "r.csv", grid, periodic.label)
    assert back.labels == rep.labels
    assert back.points[0].period.c == rep.points[0].period.c
    with pytest.raises(ValueError):
        read_report_csv(tmp_path / "r.csv", GridSpec.for_kernel(periodic, 4))
