import numpy as np
import pytest

from conftest import LFSM_F1_1_F2_2
from ssmma.classifier import LABELS, classify_kernel
from ssmma.decomposer import (additivity_check, component_scales, decompose,
                              random_combinations, write_summary_csv)
from ssmma.kernels import GridSpec, make_lfsm_periodic_concat
from ssmma.quadrature import LinearCombination

UNIT = LinearCombination((1.0,), (1.0,))


@pytest.fixture(scope="module")
def concat_dec():
    k = make_lfsm_periodic_concat()
    grid = GridSpec.for_kernel(k, 8)
    return decompose(k, classify_kernel(k, grid))


def test_masks_partition_nodes(concat_dec):
    total = sum(concat_dec.node_masks[lab].astype(int) for lab in LABELS)
    assert np.all(total == 1)
    assert concat_dec.node_count("fixed") == 4 and concat_dec.node_count("cyclic") == 4
    assert concat_dec.empty_labels() == ["dissipative", "conservative_nonperiodic"]


def test_fixed_component_is_the_lfsm_part(concat_dec):
    parts = component_scales(concat_dec, UNIT)
    assert parts["fixed"] == pytest.approx(LFSM_F1_1_F2_2, rel=1e-7)
    assert parts["dissipative"] == 0.0


def test_additivity(concat_dec):
    check = additivity_check(concat_dec, random_combinations(4, seed=1))
    assert check.passed and check.max_deviation < 1e-10
    assert check.failures == []


def test_additivity_needs_combinations(concat_dec):
    with pytest.raises(ValueError):
        additivity_check(concat_dec, [])


def test_grid_mismatch_rejected(concat_dec):
    other = concat_dec.grid.with_options(u_window=20.0)
    with pytest.raises(ValueError):
        component_scales(concat_dec, UNIT, other)


def test_report_must_match_kernel(lfsm, periodic):
    grid = GridSpec.for_kernel(lfsm, 2)
    report = classify_kernel(lfsm, grid)
    with pytest.raises(ValueError):
        decompose(periodic, report)


def test_single_class_kernel(lfsm):
    dec = decompose(lfsm, classify_kernel(lfsm, GridSpec.for_kernel(lfsm, 2)))
    assert len(dec.empty_labels()) == 3


def test_random_combinations_seeded():
    a = random_combinations(5, 3)
    assert a == random_combinations(5, 3)
    assert all(1 <= len(c.theta) <= 3 for c in a)
    assert all(-2 <= t <= 2 for c in a for t in c.times)


def test_summary_csv(tmp_path, concat_dec):
    path = tmp_path / "s.csv"
    write_summary_csv(concat_dec, random_combinations(2, 0), path, header_lines=["a = 1"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# a = 1"
    assert lines[1] == "label,node_count,alpha_norm_G1,sigma_alpha_0,sigma_alpha_1"
    assert len(lines) == 6
