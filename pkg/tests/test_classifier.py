import math

import numpy as np
import pytest

from conftest import DISSIPATIVE_HOPF_RATIO
from ssmma.classifier import (LABELS, ClassificationReport, Thresholds, best_period_candidate,
                              c_candidates, classify_kernel, classify_point, fixed_fit,
                              g_candidates, hopf_test, limit_bands, limit_fixed_test,
                              periodic_search)
from ssmma.kernels import GridSpec, make_mixed_lfsm, make_zero_kernel


@pytest.fixture(scope="module")
def pgrid(periodic):
    return GridSpec.for_kernel(periodic, 8)


@pytest.fixture(scope="module")
def lgrid(lfsm):
    return GridSpec.for_kernel(lfsm, 8)


def test_thresholds_validation():
    with pytest.raises(ValueError):
        Thresholds(hopf_finite_ratio=0.95, hopf_divergent_ratio=0.9)
    with pytest.raises(ValueError):
        Thresholds(hopf_octaves=2)
    with pytest.raises(ValueError):
        Thresholds(c_exclusion=5.0)


def test_candidate_grids(lgrid):
    cs = c_candidates(Thresholds())
    assert np.all(np.abs(np.log(cs)) >= 0.05 - 1e-12)
    assert np.any(np.isclose(cs, math.e)) and np.any(np.isclose(cs, 0.5))
    gs = g_candidates(lgrid)
    assert gs[0] == 0.0 and np.isclose(gs.max(), 12.5)


def test_c_grid_must_respect_exclusion(periodic, pgrid):
    with pytest.raises(ValueError):
        best_period_candidate(periodic, 0.3, pgrid, c_grid=[1.01])


def test_periodic_witness_is_e(periodic, pgrid):
    w = periodic_search(periodic, 0.3, pgrid)
    assert w is not None
    assert abs(w.c - math.e) < 1e-6
    assert abs(w.b - math.e ** periodic.kappa) < 1e-6
    assert w.g == 0.0 and w.residual < 1e-12


def test_periodic_is_not_fixed(periodic, pgrid):
    assert fixed_fit(periodic, 0.3, pgrid).residual > 0.1
    assert not limit_fixed_test(periodic, 0.3, pgrid)


def test_lfsm_canonical_fit(lfsm, lgrid):
    fit = fixed_fit(lfsm, 0.4, lgrid)
    assert fit.residual < 1e-12
    assert fit.d == pytest.approx(1.0, rel=1e-9) and fit.h == pytest.approx(2.0, rel=1e-9)
    assert fit.f == 0.0


def test_lfsm_shifted_fit_recovers_shift():
    k = make_mixed_lfsm(lambda x: np.ones_like(x), 0.0, 1.5, 0.5)
    shifted = make_mixed_lfsm(1.0, 0.0, 1.5, 0.5)
    from dataclasses import replace
    moved = replace(shifted, G=lambda x, u: shifted.G(x, np.asarray(u) + 0.3))
    fit = fixed_fit(moved, 0.5, GridSpec.for_kernel(k, 2))
    assert fit.residual < 1e-8
    assert fit.f == pytest.approx(0.3, abs=1e-6)


def test_lfsm_limit_test(lfsm, lgrid):
    assert limit_fixed_test(lfsm, 0.4, lgrid)
    bands = limit_bands(Thresholds())
    assert len(bands) == 6 and all(b.size == 8 for b in bands)


def test_hopf_dissipative_ratio(dissipative):
    trace = hopf_test(dissipative, 0.5, GridSpec.for_kernel(dissipative, 2))
    assert trace.verdict == "finite"
    assert trace.growth_ratio == pytest.approx(DISSIPATIVE_HOPF_RATIO, rel=1e-4)
    assert trace.partial_integrals.size == 8
    assert np.all(trace.increments > 0)


def test_hopf_periodic_ratio_one(periodic, pgrid):
    trace = hopf_test(periodic, 0.3, pgrid)
    assert trace.verdict == "divergent"
    assert trace.growth_ratio == pytest.approx(1.0, abs=0.05)


def test_hopf_octave_guard(periodic, pgrid):
    with pytest.raises(ValueError):
        hopf_test(periodic, 0.3, pgrid, octaves=2)


def test_zero_kernel_is_finite():
    z = make_zero_kernel()
    trace = hopf_test(z, 0.5, GridSpec.for_kernel(z, 2))
    assert trace.verdict == "finite" and trace.growth_ratio == 0.0


def test_classify_point_labels(periodic, pgrid, lfsm, lgrid, dissipative):
    assert classify_point(periodic, 0.3, pgrid).label == "cyclic"
    lp = classify_point(lfsm, 0.4, lgrid)
    assert lp.label == "fixed" and lp.period is not None and not lp.contradiction
    dp = classify_point(dissipative, 0.5, GridSpec.for_kernel(dissipative, 2))
    assert dp.label == "dissipative" and dp.period is None


def test_report_roundtrip_csv(tmp_path, lfsm):
    grid = GridSpec.for_kernel(lfsm, 3)
    report = classify_kernel(lfsm, grid, n_jobs=2)
    assert isinstance(report, ClassificationReport)
    assert report.labels == ["fixed"] * 3
    assert report.fractions["fixed"] == 1.0 and set(report.fractions) == set(LABELS)
    report.write_csv(tmp_path / "r.csv", ["note = 1"])
    report.write_summary(tmp_path / "r.json")
    text = (tmp_path / "r.csv").read_text().splitlines()
    assert text[0] == "# note = 1" and text[1].startswith("x,label,")
    assert '"contradictions": 0' in (tmp_path / "r.json").read_text()


def test_classify_kernel_threads_do_not_change_output(periodic):
    grid = GridSpec.for_kernel(periodic, 4)
    a = classify_kernel(periodic, grid, n_jobs=1)
    b = classify_kernel(periodic, grid, n_jobs=3)
    assert list(a.rows()) == list(b.rows())


def test_classify_kernel_reports_node_errors(lfsm):
    from dataclasses import replace

    def bad(x, u):
        raise RuntimeError("boom")

    grid = GridSpec.for_kernel(lfsm, 2)
    report = classify_kernel(replace(lfsm, G=bad, increment_fn=bad), grid)
    assert len(report.errors) == 2
    assert all(p.warnings for p in report.points)
