"""Point-wise numerical classification of a kernel into D, C_F, C_L and C minus C_P.

For every x-node three independent tests run on G(x, .):

* Hopf integral: ``int dc int du c^(-H alpha) |G_c(x, c u)|^alpha`` finite
  (dissipative) or infinite (conservative), judged from octave increments.
* Canonical fit: distance of G(x, .) to ``d (u+f)_+^k + h (u+f)_-^k + g``.
* Period search: some c != 1 and g with ``G(x, c u + g) = b G(x, u + g) + d``.

Labels follow: dissipative if Hopf is finite, else fixed if the canonical fit
succeeds, else cyclic if a period witness exists, else conservative
non-periodic.
"""

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import asdict, dataclass, field
import json
import math
import warnings

import numpy as np
from scipy.optimize import minimize_scalar

from .quadrature import _combination_breaks, integrate_line, TAIL_OCTAVES

LABELS = ("dissipative", "fixed", "cyclic", "conservative_nonperiodic")
REPORT_COLUMNS = ("x", "label", "hopf_verdict", "hopf_ratio", "cf_residual", "period_c",
                  "period_g", "period_b", "period_d", "period_residual", "limit_fixed",
                  "warnings")


@dataclass(frozen=True)
class Thresholds:
    pfsm_tol: float = 1e-6
    cf_tol: float = 1e-6
    hopf_finite_ratio: float = 0.5
    hopf_divergent_ratio: float = 0.9
    hopf_cap: float = 1e6
    hopf_octaves: int = 8
    c_exclusion: float = 0.05
    c_log_max: float = 4.0
    c_per_sign: int = 64
    limit_bands: int = 6
    limit_per_band: int = 4
    screen_nodes: int = 128
    top_k: int = 8
    exact_floor: float = 1e-12

    def __post_init__(self):
        if not 0 < self.hopf_finite_ratio <= self.hopf_divergent_ratio:
            raise ValueError("need 0 < hopf_finite_ratio <= hopf_divergent_ratio")
        if self.hopf_octaves < 3:
            raise ValueError("hopf_octaves must be >= 3")
        if self.c_exclusion <= 0 or self.c_exclusion >= self.c_log_max:
            raise ValueError("c_exclusion must lie in (0, c_log_max)")
        if self.pfsm_tol <= 0 or self.cf_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class PeriodWitness:
    c: float
    g: float
    b: float
    d: float
    residual: float


@dataclass(frozen=True)
class FixedFit:
    d: float
    f: float
    h: float
    g: float
    residual: float


@dataclass
class HopfTrace:
    partial_integrals: np.ndarray
    verdict: str
    growth_ratio: float

    @property
    def increments(self):
        return np.diff(self.partial_integrals, prepend=0.0)


@dataclass
class PointResult:
    x: float
    label: str
    hopf: HopfTrace
    fixed_fit: FixedFit
    period: PeriodWitness = None
    limit_fixed: bool = False
    contradiction: bool = False
    warnings: list = field(default_factory=list)


# shared affine regression ---------------------------------------------------------

def _affine(y, z):
    """Fit ``y ~ b z + d``; returns (b, d, relative residual) or None when skipped."""
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(z))):
        return None
    ym, zm = y.mean(), z.mean()
    yc, zc = y - ym, z - zm
    sy = math.sqrt(float(yc @ yc))
    sz = math.sqrt(float(zc @ zc))
    if sy == 0.0:
        if sz == 0.0:
            return 1.0, float(ym - zm), 0.0
        return None
    if sz == 0.0:
        return None
    b = float(zc @ yc) / sz ** 2
    if abs(b) * sz <= 1e-12 * sy:
        return None
    d = float(ym - b * zm)
    r = y - b * z - d
    return b, d, math.sqrt(float(r @ r)) / sy


def c_candidates(thresholds):
    logs = np.linspace(thresholds.c_exclusion, thresholds.c_log_max, thresholds.c_per_sign)
    logs = np.concatenate([logs, [1.0, math.log(2.0)]])
    logs = np.unique(np.concatenate([logs, -logs]))
    return np.exp(logs)


def g_candidates(grid):
    steps = np.arange(1, int(math.floor(grid.u_window / 4 / grid.u_step + 1e-9)) + 1)
    g = steps * grid.u_step
    return np.concatenate([[0.0], g, -g])


def _witness_key(w, floor):
    exact = w.residual <= floor
    return (not exact, 0.0 if exact else w.residual, w.c < 1, abs(math.log(w.c)))


def _search(kernel, x, grid, cs, gs, thresholds):
    """Best (c, g) period witness over the candidate sets (None if none valid)."""
    u = grid.u_nodes()
    floor = thresholds.exact_floor

    def direct(c, g):
        fit = _affine(np.asarray(kernel.G(x, c * u + g), dtype=float),
                      np.asarray(kernel.G(x, u + g), dtype=float))
        if fit is None:
            return None
        return PeriodWitness(float(c), float(g), fit[0], fit[1], fit[2])

    found = [w for w in (direct(c, 0.0) for c in cs) if w is not None]
    best = min(found, key=lambda w: _witness_key(w, floor), default=None)
    if best is not None and best.residual <= floor:
        return best

    # screen all (c, g) pairs with the closed-form 1 - rho^2 on a u-subsample
    sub = u[np.unique(np.linspace(0, u.size - 1, thresholds.screen_nodes).astype(int))]
    scores = []
    with np.errstate(all="ignore"):
        for g in gs:
            z = np.asarray(kernel.G(x, sub + g), dtype=float)
            zc = z - z.mean()
            szz = zc @ zc
            if not np.isfinite(szz) or szz == 0:
                scores.append(np.full(cs.size, np.inf))
                continue
            Y = np.asarray(kernel.G(x, cs[:, None] * sub[None, :] + g), dtype=float)
            Yc = Y - Y.mean(axis=1, keepdims=True)
            syy = np.einsum("ij,ij->i", Yc, Yc)
            syz = Yc @ zc
            score = 1.0 - syz ** 2 / (syy * szz)
            scores.append(np.where(np.isfinite(score) & (syy > 0), score, np.inf))
    if scores:
        scores = np.stack(scores)
        flat = np.argsort(scores, axis=None, kind="stable")[:thresholds.top_k]
        top = [(cs[j], gs[i]) for i, j in zip(*np.unravel_index(flat, scores.shape))
               if np.isfinite(scores[i, j])]
    else:
        top = []
    for c, g in top:
        w = direct(c, g)
        if w is not None:
            found.append(w)
    best = min(found, key=lambda w: _witness_key(w, floor), default=None)
    if best is None or best.residual <= floor:
        return best

    # golden-section polish in g, then in ln c
    def res_g(g, c=best.c):
        w = direct(c, g)
        return np.inf if w is None else w.residual

    span = grid.u_step
    opt = minimize_scalar(res_g, bounds=(best.g - span, best.g + span), method="bounded",
                          options={"xatol": 1e-10})
    cand = direct(best.c, opt.x)
    if cand is not None and cand.residual < best.residual:
        best = cand
    # stay inside the span of same-signed candidates (keeps the c = 1 exclusion band out)
    lc = math.log(best.c)
    logs = np.log(cs)
    same = np.abs(logs[np.sign(logs) == math.copysign(1.0, lc)])
    dl = (thresholds.c_log_max - thresholds.c_exclusion) / max(thresholds.c_per_sign - 1, 1)
    lo_abs = max(float(same.min()), abs(lc) - dl)
    hi_abs = min(float(same.max()), abs(lc) + dl)
    lo, hi = (lo_abs, hi_abs) if lc > 0 else (-hi_abs, -lo_abs)
    if hi > lo:
        opt = minimize_scalar(lambda s: res_g(best.g, math.exp(s)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        cand = direct(math.exp(opt.x), best.g)
        if cand is not None and cand.residual < best.residual:
            best = cand
    return best


def best_period_candidate(kernel, x, grid, c_grid=None, thresholds=None):
    """Minimal-residual (c, g) candidate regardless of tolerance."""
    thresholds = thresholds or Thresholds()
    cs = np.asarray(c_grid if c_grid is not None else c_candidates(thresholds), dtype=float)
    if np.any(cs <= 0) or np.any(np.abs(np.log(cs)) < thresholds.c_exclusion * (1 - 1e-9)):
        raise ValueError("c_grid must be positive and respect |ln c| >= c_exclusion")
    return _search(kernel, x, grid, cs, g_candidates(grid), thresholds)


def periodic_search(kernel, x, grid, c_grid=None, thresholds=None):
    """Period witness with residual below ``pfsm_tol``, or None."""
    thresholds = thresholds or Thresholds()
    w = best_period_candidate(kernel, x, grid, c_grid, thresholds)
    if w is None or w.residual >= thresholds.pfsm_tol:
        return None
    return w


def limit_bands(thresholds):
    frac = np.linspace(1.0, 0.5, thresholds.limit_per_band, endpoint=False)
    return [np.exp(np.concatenate([2.0 ** -k * frac, -(2.0 ** -k) * frac]))
            for k in range(1, thresholds.limit_bands + 1)]


def limit_fixed_test(kernel, x, grid, thresholds=None):
    """True iff every band ``|ln c| in (2^-k-1, 2^-k]`` holds a period witness."""
    thresholds = thresholds or Thresholds()
    gs = g_candidates(grid)
    for cs in limit_bands(thresholds):
        w = _search(kernel, x, grid, cs, gs, thresholds)
        if w is None or w.residual >= thresholds.pfsm_tol:
            return False
    return True


# canonical-form fit ---------------------------------------------------------------

def _design(v, kappa):
    """Columns of the canonical family evaluated at ``v = u + f`` (last axis)."""
    pos = v > 0
    neg = v < 0
    if kappa == 0.0:
        nz = v != 0
        a = np.where(nz, np.log(np.abs(np.where(nz, v, 1.0))), 0.0)
        return a, pos.astype(float)
    safe = np.abs(np.where(v != 0, v, 1.0))
    pw = safe ** kappa
    return np.where(pos, pw, 0.0), np.where(neg, pw, 0.0)


def _kappa_for_fit(kernel):
    if kernel.params.get("branch") == "log" or abs(kernel.kappa) < 1e-12:
        return 0.0
    return kernel.kappa


def fixed_fit(kernel, x, grid, thresholds=None):
    """Best fit of G(x, .) by the canonical mixed-LFSM family over shifts f."""
    thresholds = thresholds or Thresholds()
    kappa = _kappa_for_fit(kernel)
    u = grid.u_nodes()
    y = np.asarray(kernel.G(x, u), dtype=float)
    if not np.all(np.isfinite(y)):
        return FixedFit(0.0, 0.0, 0.0, 0.0, np.inf)
    ym = y.mean()
    yc = y - ym
    sy = math.sqrt(float(yc @ yc))
    if sy == 0.0:
        return FixedFit(0.0, 0.0, 0.0, float(ym), 0.0)

    def direct(f):
        p, m = _design(u + f, kappa)
        A = np.column_stack([p, m, np.ones_like(u)])
        if not np.all(np.isfinite(A)):
            return None
        beta, *_ = np.linalg.lstsq(A, y, rcond=None)
        r = y - A @ beta
        return FixedFit(float(beta[0]), float(f), float(beta[1]), float(beta[2]),
                        math.sqrt(float(r @ r)) / sy)

    n_f = int(round(grid.u_window / grid.u_step))
    fs = np.arange(-n_f, n_f + 1) * grid.u_step
    scores = np.full(fs.size, np.inf)
    yy = float(y @ y)
    sum_y = float(y.sum())
    with np.errstate(all="ignore"):
        for start in range(0, fs.size, 128):
            f = fs[start:start + 128]
            p, m = _design(u[None, :] + f[:, None], kappa)
            one = np.ones_like(p)
            cols = np.stack([p, m, one], axis=1)
            gram = np.einsum("kiu,kju->kij", cols, cols)
            rhs = np.stack([p @ y, m @ y, np.full(f.size, sum_y)], axis=1)
            beta = np.einsum("kij,kj->ki", np.linalg.pinv(gram), rhs)
            rss = yy - np.einsum("ki,ki->k", beta, rhs)
            ok = np.all(np.isfinite(cols), axis=(1, 2)) & np.isfinite(rss)
            scores[start:start + f.size] = np.where(ok, np.maximum(rss, 0.0), np.inf)
    order = np.argsort(scores, kind="stable")[:thresholds.top_k]
    if 0.0 not in fs[order]:
        order = np.append(order, n_f)
    fits = [ft for ft in (direct(fs[i]) for i in order) if ft is not None]
    if not fits:
        return FixedFit(0.0, 0.0, 0.0, float(ym), 1.0)
    best = min(fits, key=lambda ft: (ft.residual, abs(ft.f)))
    if best.residual > thresholds.exact_floor:
        def res(f):
            ft = direct(f)
            return np.inf if ft is None else ft.residual

        opt = minimize_scalar(res, bounds=(best.f - grid.u_step, best.f + grid.u_step),
                              method="bounded", options={"xatol": 1e-10})
        cand = direct(opt.x)
        if cand is not None and cand.residual < best.residual:
            best = cand
    return best


# Hopf integral test -----------------------------------------------------------------

def hopf_test(kernel, x, grid, octaves=None, thresholds=None, gl_points=6, rtol=1e-3):
    """Octave-wise partial integrals ``J_n`` over ``c in [e^-n, e^n]``.

    With ``v = c u`` and ``c = e^s`` the integral becomes
    ``int ds e^(-H alpha s) A(e^s)``, ``A(c) = int |G(x, c + v) - G(x, v)|^alpha dv``.
    Each u-integral uses a core window ``U max(1, c)`` so the rescaled
    integrand is never truncated by the window.
    """
    thresholds = thresholds or Thresholds()
    n = int(octaves or thresholds.hopf_octaves)
    if n < 3:
        raise ValueError("octaves must be >= 3")
    alpha, h = kernel.alpha, kernel.hurst
    tail = kernel.tail_at(x)
    gl_x, gl_w = np.polynomial.legendre.leggauss(gl_points)

    def A(c):
        window = grid.u_window * max(1.0, c)
        radius = window * math.exp(TAIL_OCTAVES)
        jumps, sing = _combination_breaks(kernel, x, (0.0, c), radius)
        res = integrate_line(lambda v: np.abs(kernel.increment_at(x, c, v)) ** alpha,
                             window=window, jumps=jumps, singular=sing, tail_exponent=tail,
                             rtol=rtol, atol=1e-300, refinement_max=grid.refinement_max,
                             strict=False)
        return res.value

    def chunk(k):
        s = k + 0.5 + 0.5 * gl_x
        vals = np.array([A(math.exp(si)) for si in s])
        return float(0.5 * gl_w @ (np.exp(-h * alpha * s) * vals))

    inc = np.array([chunk(m - 1) + chunk(-m) for m in range(1, n + 1)])
    J = np.cumsum(inc)
    if J[-1] == 0.0:
        return HopfTrace(J, "finite", 0.0)
    lag = min(3, n - 1)
    ratio = (inc[-1] / inc[-1 - lag]) ** (1.0 / lag) if inc[-1 - lag] > 0 else np.inf
    if ratio >= thresholds.hopf_divergent_ratio or J[-1] > thresholds.hopf_cap * J[0]:
        verdict = "divergent"
    elif ratio < thresholds.hopf_finite_ratio:
        verdict = "finite"
    else:
        verdict = "indeterminate"
    return HopfTrace(J, verdict, float(ratio))


# orchestration ------------------------------------------------------------------------

def classify_point(kernel, x, grid, thresholds=None):
    """Label one x-node; returns a :class:`PointResult`."""
    thresholds = thresholds or Thresholds()
    hopf = hopf_test(kernel, x, grid, thresholds=thresholds)
    fit = fixed_fit(kernel, x, grid, thresholds)
    witness = periodic_search(kernel, x, grid, thresholds=thresholds)
    limit = limit_fixed_test(kernel, x, grid, thresholds)
    notes = []
    contradiction = False
    if hopf.verdict == "finite":
        label = "dissipative"
        if witness is not None:
            contradiction = True
            notes.append("period witness on a Hopf-finite point (C_P must lie in C)")
    else:
        if hopf.verdict == "indeterminate":
            notes.append(f"indeterminate Hopf verdict (ratio {hopf.growth_ratio:.3g}); "
                         "treated as conservative")
        if fit.residual < thresholds.cf_tol:
            label = "fixed"
            if witness is None:
                contradiction = True
                notes.append("canonical fit without a period witness (C_F must lie in C_P)")
        elif witness is not None:
            label = "cyclic"
        else:
            label = "conservative_nonperiodic"
    return PointResult(float(x), label, hopf, fit, witness, limit, contradiction, notes)


@dataclass
class ClassificationReport:
    points: list
    thresholds: Thresholds
    grid: object
    kernel_label: str = ""
    errors: list = field(default_factory=list)

    @property
    def labels(self):
        return [p.label for p in self.points]

    @property
    def fractions(self):
        n = max(len(self.points), 1)
        return {lab: sum(p.label == lab for p in self.points) / n for lab in LABELS}

    @property
    def n_warnings(self):
        return sum(bool(p.warnings) for p in self.points)

    def mask(self, label):
        return np.array([p.label == label for p in self.points], dtype=bool)

    def rows(self):
        for p in self.points:
            w = p.period
            yield {
                "x": repr(p.x),
                "label": p.label,
                "hopf_verdict": p.hopf.verdict,
                "hopf_ratio": f"{p.hopf.growth_ratio:.10g}",
                "cf_residual": f"{p.fixed_fit.residual:.6e}",
                "period_c": "" if w is None else repr(w.c),
                "period_g": "" if w is None else repr(w.g),
                "period_b": "" if w is None else repr(w.b),
                "period_d": "" if w is None else repr(w.d),
                "period_residual": "" if w is None else f"{w.residual:.6e}",
                "limit_fixed": str(bool(p.limit_fixed)).lower(),
                "warnings": " | ".join(p.warnings),
            }

    def summary(self):
        return {
            "kernel": self.kernel_label,
            "n_nodes": len(self.points),
            "fractions": self.fractions,
            "thresholds": asdict(self.thresholds),
            "grid": {"n_x": int(self.grid.n_x), "u_window": self.grid.u_window,
                     "u_step": self.grid.u_step, "refinement_max": self.grid.refinement_max},
            "contradictions": sum(p.contradiction for p in self.points),
            "warnings": self.n_warnings,
            "errors": list(self.errors),
        }

    def write_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
            writer.writeheader()
            writer.writerows(self.rows())

    def write_summary(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")


def classify_kernel(kernel, grid, thresholds=None, n_jobs=1):
    """Run :func:`classify_point` over every x-node (order preserved)."""
    thresholds = thresholds or Thresholds()
    if grid.n_x == 0:
        raise ValueError("grid has no x-nodes")
    errors = []

    def one(i):
        x = float(grid.x[i])
        try:
            return classify_point(kernel, x, grid, thresholds)
        except Exception as exc:  # reported per node, never aborts the run
            errors.append(f"x={x!r}: {type(exc).__name__}: {exc}")
            empty = HopfTrace(np.zeros(0), "indeterminate", float("nan"))
            return PointResult(x, "conservative_nonperiodic", empty,
                               FixedFit(0.0, 0.0, 0.0, 0.0, float("nan")),
                               warnings=[f"classification failed: {exc}"])

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if n_jobs and n_jobs > 1:
            with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                points = list(pool.map(one, range(grid.n_x)))
        else:
            points = [one(i) for i in range(grid.n_x)]
    return ClassificationReport(points, thresholds, grid, kernel.label, sorted(errors))
