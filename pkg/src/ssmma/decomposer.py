"""Four-part decomposition of a kernel along its classified x-nodes."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .classifier import LABELS
from .kernels import restrict
from .quadrature import LinearCombination, cf_exponent


@dataclass
class Decomposition:
    kernel: object
    components: dict
    report: object
    grid: object
    node_masks: dict
    cache: dict = field(default_factory=dict)

    def node_count(self, label):
        return int(self.node_masks[label].sum())

    def empty_labels(self):
        return [lab for lab in LABELS if self.node_count(lab) == 0]


def _membership(grid, mask):
    """Predicate on x that is true exactly on the masked grid nodes."""
    members = np.asarray(grid.x)[mask]

    def keep(x):
        x = np.asarray(x, dtype=float)
        return np.isin(x, members)

    return keep


def decompose(kernel, report):
    """Restrict ``kernel`` to each label set of ``report``."""
    grid = report.grid
    if len(report.points) != grid.n_x or not np.array_equal(
            np.array([p.x for p in report.points]), grid.x):
        raise ValueError("report x-nodes do not match its grid")
    if report.kernel_label and report.kernel_label != kernel.label:
        raise ValueError(f"report was produced for {report.kernel_label!r}, "
                         f"not {kernel.label!r}")
    masks = {lab: report.mask(lab) for lab in LABELS}
    components = {lab: restrict(kernel, _membership(grid, masks[lab])) for lab in LABELS}
    return Decomposition(kernel, components, report, grid, masks)


def _check_grid(dec, grid):
    if grid is not None and not dec.grid.matches(grid):
        raise ValueError("grid differs from the one used for classification")
    return dec.grid if grid is None else grid


def _as_comb(comb):
    return comb if isinstance(comb, LinearCombination) else LinearCombination(*comb)


def component_scales(dec, comb, grid=None, **quad):
    """``sigma^alpha`` of each component for one linear combination."""
    grid = _check_grid(dec, grid)
    comb = _as_comb(comb)
    out = {}
    for lab in LABELS:
        key = (lab, comb.theta, comb.times)
        if key not in dec.cache:
            if dec.node_count(lab) == 0:
                dec.cache[key] = 0.0
            else:
                dec.cache[key] = cf_exponent(dec.components[lab], comb, grid, **quad)
        out[lab] = dec.cache[key]
    return out


@dataclass
class AdditivityReport:
    rows: list
    tolerance: float

    @property
    def max_deviation(self):
        return max((r["deviation"] for r in self.rows), default=0.0)

    @property
    def passed(self):
        return self.max_deviation < self.tolerance

    @property
    def failures(self):
        return [r for r in self.rows if not r["deviation"] < self.tolerance]


def additivity_check(dec, combs, grid=None, tolerance=1e-6, **quad):
    """Compare the summed component exponents with the whole kernel's."""
    combs = [_as_comb(c) for c in combs]
    if not combs:
        raise ValueError("need at least one combination")
    grid = _check_grid(dec, grid)
    rows = []
    for comb in combs:
        parts = component_scales(dec, comb, grid, **quad)
        total = cf_exponent(dec.kernel, comb, grid, **quad)
        summed = float(np.sum([parts[lab] for lab in LABELS]))
        dev = 0.0 if total == 0.0 and summed == 0.0 else abs(summed - total) / abs(total)
        rows.append({"theta": comb.theta, "times": comb.times, "total": total,
                     "sum": summed, "parts": parts, "deviation": dev})
    return AdditivityReport(rows, tolerance)


def random_combinations(n, seed, max_terms=3, t_range=(-2.0, 2.0)):
    """``n`` combinations with 1..max_terms terms, theta ~ N(0,1), t ~ U(t_range)."""
    from ._validation import derive_key
    rng = np.random.Generator(np.random.Philox(key=derive_key(seed, "combinations")))
    out = []
    for _ in range(n):
        k = int(rng.integers(1, max_terms + 1))
        theta = rng.standard_normal(k)
        times = rng.uniform(*t_range, size=k)
        out.append(LinearCombination(tuple(theta), tuple(times)))
    return out


def write_summary_csv(dec, combs, path, grid=None, header_lines=(), **quad):
    """Columns: label, node_count, alpha_norm of G_1, sigma^alpha per combination."""
    combs = [_as_comb(c) for c in combs]
    unit = LinearCombination((1.0,), (1.0,))
    norms = component_scales(dec, unit, grid, **quad)
    per_comb = [component_scales(dec, c, grid, **quad) for c in combs]
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["label", "node_count", "alpha_norm_G1"]
                        + [f"sigma_alpha_{i}" for i in range(len(combs))])
        for lab in LABELS:
            writer.writerow([lab, dec.node_count(lab), f"{norms[lab]:.12g}"]
                            + [f"{pc[lab]:.12g}" for pc in per_comb])
