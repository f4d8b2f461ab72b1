"""Text formats: piecewise kernel tables, ``key = value`` configs, report CSVs."""

import csv
from pathlib import Path

import numpy as np

from ._validation import ParameterError
from .classifier import LABELS, ClassificationReport, FixedFit, HopfTrace, PeriodWitness, \
    PointResult, Thresholds
from .kernels import FiniteSet, KernelSpec

INTERPOLATIONS = ("linear", "nearest")


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment; blank lines ignored."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ValueError(f"{path}:{n}: empty key")
            out[key] = value
    return out


def _directives(lines):
    out = {}
    for line in lines:
        body = line.lstrip("#").strip()
        if "=" in body:
            key, value = (p.strip() for p in body.split("=", 1))
            out[key.lower()] = value
    return out


def load_piecewise_kernel(path, alpha=None, hurst=None):
    """Kernel from a whitespace table of ``x u G`` rows.

    Header comments declare ``alpha``, ``hurst``, ``interpolation`` (linear or
    nearest in u) and optionally ``tail_exponent``.  X is the finite set of
    distinct x values with equal weights; G is zero outside each x's u-range.
    """
    path = Path(path)
    comments, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line)
                continue
            parts = line.split()
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                if rows:
                    raise ValueError(f"{path}: non-numeric row {line!r}")
                continue  # column header
            if len(parts) != 3:
                raise ValueError(f"{path}: rows must have 3 columns (x u G), got {line!r}")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    meta = _directives(comments)
    table = np.array(rows)
    if not np.all(np.isfinite(table)):
        raise ValueError(f"{path}: table has non-finite entries")
    interp = meta.get("interpolation", "linear").lower()
    if interp not in INTERPOLATIONS:
        raise ValueError(f"{path}: interpolation must be one of {INTERPOLATIONS}")
    alpha = float(alpha if alpha is not None else meta.get("alpha", "nan"))
    hurst = float(hurst if hurst is not None else meta.get("hurst", "nan"))
    if not (np.isfinite(alpha) and np.isfinite(hurst)):
        raise ParameterError(f"{path}: alpha and hurst must be declared")
    tail = float(meta["tail_exponent"]) if "tail_exponent" in meta else np.inf

    xs = np.unique(table[:, 0])
    curves = []
    for x in xs:
        sel = table[table[:, 0] == x]
        order = np.argsort(sel[:, 1], kind="stable")
        u, g = sel[order, 1], sel[order, 2]
        if np.any(np.diff(u) == 0):
            raise ValueError(f"{path}: duplicate u values at x = {x}")
        curves.append((u, g))

    def curve_at(x):
        i = int(np.argmin(np.abs(xs - x)))
        return curves[i]

    def evaluate(x, u):
        cu, cg = curve_at(x)
        if interp == "linear":
            return np.interp(u, cu, cg, left=0.0, right=0.0)
        inside = (u >= cu[0]) & (u <= cu[-1])
        idx = np.clip(np.searchsorted(cu, u), 1, cu.size - 1)
        nearest = np.where(np.abs(u - cu[idx - 1]) <= np.abs(cu[idx] - u), idx - 1, idx)
        return np.where(inside, cg[nearest], 0.0)

    def G(x, u):
        x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
        out = np.empty(u.shape)
        for xv in np.unique(x):
            sel = x == xv
            out[sel] = evaluate(xv, u[sel])
        return out

    def breaks(x, lo, hi):
        cu, _ = curve_at(x)
        pts = cu if interp == "linear" else np.concatenate([cu[[0, -1]], 0.5 * (cu[1:] + cu[:-1])])
        return pts[(pts >= lo) & (pts <= hi)], np.empty(0)

    weights = np.full(xs.size, 1.0 / xs.size)
    return KernelSpec(G=G, alpha=alpha, hurst=hurst, space=FiniteSet(xs, weights),
                      label=f"file:{path.name}", tail_exponent=tail, breakpoints_fn=breaks,
                      params={"path": str(path), "interpolation": interp})


def write_piecewise_kernel(path, x, u, values, alpha, hurst, interpolation="linear"):
    """Write a table readable by :func:`load_piecewise_kernel`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# alpha = {float(alpha)!r}\n# hurst = {float(hurst)!r}\n")
        fh.write(f"# interpolation = {interpolation}\n")
        fh.write("x u G\n")
        for xi, row in zip(x, values):
            for ui, gi in zip(u, row):
                fh.write(f"{float(xi)!r} {float(ui)!r} {float(gi)!r}\n")


def _float(text):
    return float(text) if text not in ("", None) else None


def read_report_csv(path, grid, kernel_label="", thresholds=None):
    """Rebuild a :class:`ClassificationReport` from a classify CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    if not rows:
        raise ValueError(f"{path}: empty report")
    points = []
    for r in rows:
        if r["label"] not in LABELS:
            raise ValueError(f"{path}: unknown label {r['label']!r}")
        witness = None
        if r.get("period_c"):
            witness = PeriodWitness(float(r["period_c"]), float(r["period_g"]),
                                    float(r["period_b"]), float(r["period_d"]),
                                    float(r["period_residual"]))
        hopf = HopfTrace(np.zeros(0), r["hopf_verdict"], float(r["hopf_ratio"]))
        fit = FixedFit(0.0, 0.0, 0.0, 0.0, float(r["cf_residual"]))
        notes = [w for w in r.get("warnings", "").split(" | ") if w]
        points.append(PointResult(float(r["x"]), r["label"], hopf, fit, witness,
                                  r["limit_fixed"] == "true", False, notes))
    xs = np.array([p.x for p in points])
    if xs.size != grid.n_x or not np.allclose(xs, grid.x, rtol=0, atol=1e-12):
        raise ValueError(f"{path}: report x-nodes do not match the grid "
                         f"({xs.size} rows vs {grid.n_x} nodes)")
    for p, x in zip(points, grid.x):
        p.x = float(x)
    return ClassificationReport(points, thresholds or Thresholds(), grid, kernel_label)
