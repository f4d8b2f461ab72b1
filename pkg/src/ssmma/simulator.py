"""Monte-Carlo paths of X(t) = int int G_t(x, u) M(dx, du) on a cell grid.

Each (x-node i, u-cell j) carries an independent SaS increment with scale
``(w_i density_i du)^(1/alpha)``.  Increments come from a counter-based Philox
stream keyed by the run seed with counter ``(0, j, i, region)``, so the noise
of a cell does not depend on the worker count.  Region 0 is the uniform core,
1 the geometric tail and ``2 + m`` the m-th graded sub-cell of a core cell.
"""

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field
import math
import struct

import numpy as np

from ._validation import as_float_array, check_count, derive_key
from .quadrature import LinearCombination, cf_exponent
from .stable import sas_from_uniforms
from .wpaths import WProcessSpec, sample_w_paths

__all__ = ["DiscreteMeasure", "PathEnsemble", "discretize_measure", "sample_paths",
           "sample_w_paths", "WProcessSpec", "write_csv", "write_binary", "read_binary",
           "read_csv", "parse_times"]

MAGIC = b"FSM1"
_HEADER = struct.Struct("<4sQQq")
_U_OFFSET = 2 ** 62


@dataclass
class DiscreteMeasure:
    """Cells ``(x_i, u_j)`` with SaS scales; ``u_labels`` are absolute cell indices
    (cell ``j`` is centred at ``-U + (j + 1/2) du`` for the core window U)."""

    x: np.ndarray
    u: np.ndarray
    u_labels: np.ndarray
    u_step: float
    scales: np.ndarray
    alpha: float

    @property
    def total_mass(self):
        return float(np.sum(self.scales ** self.alpha))


def discretize_measure(grid, alpha, density=None, extend_cells=0):
    """Per-cell scales ``(weight_x * du)^(1/alpha)`` over ``[-U, U]`` plus
    ``extend_cells`` extra cells on each side."""
    n = int(round(2 * grid.u_window / grid.u_step))
    step = 2 * grid.u_window / n
    labels = np.arange(-extend_cells, n + extend_cells)
    u = -grid.u_window + (labels + 0.5) * step
    w = np.asarray(grid.weights, dtype=float)
    if density is not None:
        w = w * np.asarray(density(grid.x), dtype=float)
    scales = np.repeat(((w * step) ** (1.0 / alpha))[:, None], u.size, axis=1)
    return DiscreteMeasure(np.asarray(grid.x, dtype=float).copy(), u, labels, step, scales,
                           float(alpha))


@dataclass
class PathEnsemble:
    times: np.ndarray
    values: np.ndarray
    seed: int
    grid: object
    kernel_label: str
    cf_target: np.ndarray = None
    cf_discrete: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def n_paths(self):
        return self.values.shape[0]

    def discrete_cf_exponent(self, theta):
        """Exact CF exponent of ``sum_k theta_k X(t_k)`` under the discretised
        model (``theta`` indexes the ensemble's time columns)."""
        coef = self.meta.get("coefficients")
        scales = self.meta.get("cell_scales")
        if coef is None:
            raise ValueError("ensemble carries no cell coefficients")
        alpha = self.meta["alpha"]
        return float(np.sum(np.abs(coef @ np.asarray(theta, dtype=float)) ** alpha
                            * scales ** alpha))

    def at(self, t):
        idx = np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-12))
        if idx.size == 0:
            raise KeyError(f"time {t} not in ensemble")
        return self.values[:, idx[0]]


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GRADE_LEVELS = 12


def _cell_coefficients(kernel, x, u, step, times, labels):
    """Cell coefficients ``G_t(x, u_j)`` (rows: times) plus graded sub-cells.

    Cells within 1.5 cells of a singular point of any ``G_t`` are replaced by
    sub-cells graded geometrically toward those points (and split at jumps);
    each sub-cell gets the 10-point Gauss-Legendre average of ``G_t``.  The
    sub-division depends on all requested times at once, so coefficients stay
    linear in G and linear combinations of columns are discretised
    consistently.  Returns ``coef, (parent_labels, sub_index, widths, sub_coef)``.
    """
    coef = np.stack([kernel.increment_at(x, t, u) for t in times])
    empty = (np.empty(0, dtype=int), np.empty(0, dtype=int), np.empty(0),
             np.empty((times.size, 0)))
    span = np.max(np.abs(times))
    jumps, sing = kernel.breakpoints(x, u[0] - step - span, u[-1] + step + span)
    if sing.size == 0:
        return coef, empty
    live = [t for t in times if t != 0]
    pts = np.concatenate([sing] + [sing - t for t in live])
    jpts = np.concatenate([jumps] + [jumps - t for t in live])
    near = np.flatnonzero(np.any(np.abs(u[:, None] - pts[None, :]) < 1.5 * step, axis=1))
    offsets = step * 2.0 ** -np.arange(_GRADE_LEVELS)
    grade = np.concatenate([pts[:, None] - offsets, pts[:, None] + offsets], axis=1).ravel()
    parents, index, lo_all, hi_all = [], [], [], []
    for j in near:
        lo, hi = u[j] - step / 2, u[j] + step / 2
        cut = np.concatenate([[lo, hi], pts, jpts, grade])
        edges = np.unique(cut[(cut >= lo) & (cut <= hi)])
        n = edges.size - 1
        parents.append(np.full(n, labels[j]))
        index.append(np.arange(n))
        lo_all.append(edges[:-1])
        hi_all.append(edges[1:])
    coef[:, near] = 0.0
    if not parents:
        return coef, empty
    lo, hi = np.concatenate(lo_all), np.concatenate(hi_all)
    nodes = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * _GL_X[None, :]
    sub = np.stack([kernel.increment_at(x, t, nodes.ravel()).reshape(nodes.shape) @ _GL_W / 2
                    for t in times])
    return coef, (np.concatenate(parents), np.concatenate(index), hi - lo, sub)


def _tail_cells(kernel, x, inner, octaves, times, ratio_log):
    """Cells beyond ``|u| = inner`` out to ``inner e^octaves``: geometric edges
    (relative width ``ratio_log``) split at every jump of ``G(x, t_k + .)``."""
    outer = inner * math.exp(octaves)
    span = float(np.max(np.abs(times)))
    jumps, _ = kernel.breakpoints(x, -outer - span, outer + span)
    geo = inner * np.exp(np.arange(0.0, octaves + 0.5 * ratio_log, ratio_log))
    shifts = np.concatenate([[0.0], times])
    moved = (jumps[None, :] - shifts[:, None]).ravel()
    mids, widths = [], []
    for sign in (1.0, -1.0):
        pts = sign * moved
        pts = pts[(pts > inner) & (pts < outer)]
        edges = np.unique(np.concatenate([geo, pts]))
        edges = edges[np.concatenate([[True], np.diff(edges) > 1e-9 * edges[1:]])]
        mids.append(sign * 0.5 * (edges[:-1] + edges[1:]))
        widths.append(np.diff(edges))
    return np.concatenate(mids), np.concatenate(widths)


def _cell_noise(key, i, label, n_paths, alpha, region=0):
    bitgen = np.random.Philox(counter=[0, int(label) + _U_OFFSET, int(i), region], key=key)
    draws = np.random.Generator(bitgen).random((n_paths, 2))
    return sas_from_uniforms(draws[:, 0], draws[:, 1], alpha)


def sample_paths(kernel, times, n_paths, grid, seed, n_jobs=1, cell_chunk=256,
                 cf_target=True, tail_octaves=16, tail_ratio=0.02):
    """Simulate ``n_paths`` realisations of ``X(t)`` at ``times``.

    Uniform cells of width ``u_step`` span ``[-U - T, U + T]`` with
    ``T = max |t|`` (rounded up to whole cells), so ``G(x, t + u)`` and
    ``G(x, u)`` are both covered over the core window.  Beyond that,
    ``tail_octaves`` e-folds of geometric cells (split at the kernel's jumps)
    carry the slowly decaying tail mass; set it to 0 for the bare window.
    ``cf_target`` attaches the quadrature exponent of ``X(t)`` (target CF
    ``exp(-I(t)|theta|^alpha)``) and the exponent of the discretised model.
    """
    times = as_float_array(times, "times")
    n_paths = check_count(n_paths, "n_paths")
    t_max = float(np.max(np.abs(times)))
    if t_max > grid.u_window:
        raise ValueError(f"u_window {grid.u_window} too narrow for times up to {t_max}; "
                         f"need u_window >= {t_max}")
    alpha = kernel.alpha
    n_core = int(round(2 * grid.u_window / grid.u_step))
    step = 2 * grid.u_window / n_core
    dm = discretize_measure(grid, alpha, kernel.density, int(math.ceil(t_max / step - 1e-9)))
    key = derive_key(seed, "cell-noise")

    cells = []
    coefs = []
    disc = np.zeros(times.size)
    inner = float(dm.u[-1] + step / 2)
    for i in range(dm.x.size):
        scale = dm.scales[i, 0]
        if scale == 0.0:
            continue
        coef, (parent, sub_idx, sub_w, sub_coef) = _cell_coefficients(
            kernel, dm.x[i], dm.u, step, times, dm.u_labels)
        disc += np.sum(np.abs(coef) ** alpha, axis=1) * scale ** alpha
        live = np.flatnonzero(np.any(coef != 0.0, axis=0))
        for j in live:
            cells.append((i, dm.u_labels[j], scale, 0))
        coefs.append(coef[:, live].T)
        if sub_w.size:
            sscale = (scale ** alpha / step * sub_w) ** (1.0 / alpha)
            disc += np.sum(np.abs(sub_coef) ** alpha * sscale ** alpha, axis=1)
            for lab, m, sc in zip(parent, sub_idx, sscale):
                cells.append((i, lab, sc, 2 + int(m)))
            coefs.append(sub_coef.T)
        if tail_octaves > 0:
            mids, widths = _tail_cells(kernel, dm.x[i], inner, tail_octaves, times, tail_ratio)
            tcoef = np.stack([kernel.increment_at(dm.x[i], t, mids) for t in times])
            tscale = (scale ** alpha / step * widths) ** (1.0 / alpha)
            disc += np.sum(np.abs(tcoef) ** alpha * tscale ** alpha, axis=1)
            live = np.flatnonzero(np.any(tcoef != 0.0, axis=0))
            for j in live:
                cells.append((i, j, tscale[j], 1))
            coefs.append(tcoef[:, live].T)
    coef_all = np.concatenate(coefs) if coefs else np.zeros((0, times.size))

    def run(start):
        stop = min(start + cell_chunk, len(cells))
        noise = np.empty((n_paths, stop - start))
        for k in range(start, stop):
            i, label, scale, region = cells[k]
            noise[:, k - start] = scale * _cell_noise(key, i, label, n_paths, alpha, region)
        return noise @ coef_all[start:stop]

    starts = range(0, len(cells), cell_chunk)
    values = np.zeros((n_paths, times.size))
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            for part in pool.map(run, starts):
                values += part
    else:
        for s in starts:
            values += run(s)
    values[:, times == 0.0] = 0.0

    target = None
    if cf_target:
        target = np.array([cf_exponent(kernel, LinearCombination((1.0,), (t,)), grid,
                                       strict=False) if t != 0 else 0.0 for t in times])
    return PathEnsemble(times, values, int(seed), grid, kernel.label, target, disc,
                        {"n_cells": len(cells), "u_step": step, "alpha": alpha, "hurst": kernel.hurst,
                         "coefficients": coef_all,
                         "cell_scales": np.array([c[2] for c in cells]),
                         "u_span": (float(dm.u[0] - step / 2), float(dm.u[-1] + step / 2))})


# time grids and file formats -------------------------------------------------------

def parse_times(spec):
    """``start:step:end`` (end included within half a step) or a comma list."""
    text = str(spec).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"time grid must be start:step:end, got {spec!r}")
        start, step, end = (float(p) for p in parts)
        if step <= 0 or end < start:
            raise ValueError(f"invalid time grid {spec!r}")
        n = int(math.floor((end - start) / step + 0.5))
        return start + step * np.arange(n + 1)
    return np.array([float(p) for p in text.split(",") if p.strip()])


def write_csv(ensemble, path, header_lines=()):
    """Times header row, then one row per path (values in repr precision)."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow([repr(float(t)) for t in ensemble.times])
        for row in ensemble.values:
            writer.writerow([repr(float(v)) for v in row])


def read_csv(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    times = np.array([float(v) for v in rows[0]])
    values = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, times.size)
    return times, values


def write_binary(ensemble, path):
    """``FSM1`` | uint64 n_paths | uint64 n_times | int64 seed | f64 times | f64 values."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, ensemble.n_paths, ensemble.times.size, ensemble.seed))
        fh.write(np.asarray(ensemble.times, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ensemble.values, dtype="<f8").tobytes())


def read_binary(path):
    with open(path, "rb") as fh:
        magic, n_paths, n_times, seed = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != MAGIC:
            raise ValueError(f"{path}: not an FSM1 file")
        times = np.frombuffer(fh.read(8 * n_times), dtype="<f8")
        values = np.frombuffer(fh.read(8 * n_paths * n_times), dtype="<f8")
    return times.copy(), values.reshape(n_paths, n_times).copy(), seed
