"""Windowed quadrature of |.|^alpha integrands over X x R.

The u-integral at each x-node is computed over the whole real line: an
adaptive composite Gauss-Legendre rule on ``[-R, R]`` (``R = U e^K`` with the
core window ``U`` from the grid and ``K`` geometric tail octaves), split at
every declared jump/singular point of the kernel, plus a geometric
extrapolation of the remaining tail mass from the declared decay exponent.
The x-integral is the weighted sum over grid nodes.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np

from ._validation import as_float_array

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GRADE_RATIO = 0.1
_GRADE_LEVELS = 15
TAIL_OCTAVES = 16


class QuadratureError(ArithmeticError):
    """Refinement stopped with the error estimate above tolerance."""

    def __init__(self, message, partial, error):
        super().__init__(message)
        self.partial = partial
        self.error = error


class TailWarning(UserWarning):
    """Integrand declared no tail-decay exponent; truncated mass is unbounded."""


@dataclass
class LineIntegral:
    value: float
    error: float
    tail: float
    tail_error: float
    n_evals: int
    converged: bool
    warnings: tuple = ()


@dataclass(frozen=True)
class LinearCombination:
    """Coefficients ``theta_k`` attached to times ``t_k``."""

    theta: tuple
    times: tuple

    def __post_init__(self):
        theta = tuple(float(v) for v in np.atleast_1d(as_float_array(self.theta, "theta")))
        times = tuple(float(v) for v in np.atleast_1d(as_float_array(self.times, "times")))
        if len(theta) != len(times):
            raise ValueError("theta and times must have equal lengths")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "times", times)

    def scaled_times(self, c):
        return LinearCombination(self.theta, tuple(c * t for t in self.times))

    def scaled_theta(self, c):
        return LinearCombination(tuple(c * th for th in self.theta), self.times)


@dataclass
class CFInfo:
    value: float
    error: float
    tail: float
    node_values: np.ndarray
    node_weights: np.ndarray
    warnings: list = field(default_factory=list)


def _gl(f, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    u = mid[:, None] + half[:, None] * _GL_X
    with np.errstate(all="ignore"):
        vals = np.asarray(f(u.ravel()), dtype=float).reshape(u.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        vals = np.where(bad, 0.0, vals)
    return half * (vals @ _GL_W), int(bad.sum())


def _graded(singular, lo, hi, h):
    grade = h * _GRADE_RATIO ** np.arange(_GRADE_LEVELS + 1)
    sing = np.asarray(singular, dtype=float).ravel()
    sing = sing[(sing >= lo) & (sing <= hi)]
    pts = [sing]
    for s in sing:
        pts.append(s + grade)
        pts.append(s - grade)
    return np.concatenate(pts) if pts else np.empty(0)


def _intervals(pts, lo, hi):
    pts = np.unique(np.clip(pts, lo, hi))
    a, b = pts[:-1], pts[1:]
    keep = (b - a) > 4 * np.spacing(np.maximum(np.abs(a), np.abs(b)))
    return a[keep], b[keep]


def _split_points(window, radius, jumps, singular):
    geo = window * np.exp(np.arange(1, int(round(np.log(radius / window))) + 1))
    jmp = np.asarray(jumps, dtype=float).ravel()
    pts = [np.linspace(-window, window, 17), geo, -geo,
           _graded(singular, -radius, radius, window / 16.0), jmp[np.abs(jmp) < radius]]
    return _intervals(np.concatenate(pts), -radius, radius)


def _tail_estimate(a, b, val, window, radius, exponent):
    """Geometric extrapolation beyond +-radius from the last e-fold chunks."""
    mid = 0.5 * (a + b)
    hi = radius
    lo = radius / np.e
    lo2 = lo / np.e
    tail = 0.0
    err = 0.0
    for sign in (1.0, -1.0):
        m = sign * mid
        last = float(val[(m > lo) & (m <= hi)].sum())
        prev = float(val[(m > lo2) & (m <= lo)].sum())
        if last == 0.0:
            continue
        emp = last / prev if prev > 0 else np.inf
        if exponent is None:
            est = last * emp / (1 - emp) if 0 < emp < 1 else np.inf
            err += est
            continue
        if np.isinf(exponent):
            err += last if emp >= 1 else last * emp / (1 - emp)
            continue
        if exponent <= 1:
            return np.inf, np.inf
        r = np.exp(1.0 - exponent)
        est = last * r / (1 - r)
        tail += est
        alt = last * emp / (1 - emp) if 0 < emp < 1 else 2 * est
        err += abs(alt - est)
    return tail, err


def _adaptive(f, a, b, rtol, atol, refinement_max, max_evals):
    """Globally adaptive bisection of the intervals ``[a_i, b_i]``."""
    m = 0.5 * (a + b)
    whole, n_bad = _gl(f, a, b)
    left, nb1 = _gl(f, a, m)
    right, nb2 = _gl(f, m, b)
    n_bad += nb1 + nb2
    n_evals = 3 * a.size * _GL_X.size
    depth = np.zeros(a.size, dtype=int)
    val = left + right
    err = np.abs(whole - val)
    converged = False
    while True:
        total = val.sum()
        tol = max(atol, rtol * abs(total))
        if err.sum() <= tol:
            converged = True
            break
        cand = (err > tol / val.size) & (depth < refinement_max)
        if not cand.any() or n_evals > max_evals:
            break
        ca, cb, cm = a[cand], b[cand], m[cand]
        na = np.concatenate([ca, cm])
        nb = np.concatenate([cm, cb])
        nwhole = np.concatenate([left[cand], right[cand]])
        nm = 0.5 * (na + nb)
        nl, k1 = _gl(f, na, nm)
        nr, k2 = _gl(f, nm, nb)
        n_bad += k1 + k2
        n_evals += 2 * na.size * _GL_X.size
        keep = ~cand
        ndepth = np.concatenate([depth[cand], depth[cand]]) + 1
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        m = np.concatenate([m[keep], nm])
        left = np.concatenate([left[keep], nl])
        right = np.concatenate([right[keep], nr])
        depth = np.concatenate([depth[keep], ndepth])
        err = np.concatenate([err[keep], np.abs(nwhole - (nl + nr))])
        val = left + right
    order = np.argsort(a, kind="stable")
    return a[order], b[order], val[order], err, n_evals, n_bad, converged


def integrate_interval(f, lo, hi, *, jumps=(), singular=(), rtol=1e-8, atol=1e-14,
                       refinement_max=40, max_evals=200_000):
    """Adaptive integral of ``f`` over a finite ``[lo, hi]`` with graded splits."""
    if hi <= lo:
        return 0.0
    jmp = np.asarray(jumps, dtype=float).ravel()
    pts = np.concatenate([[lo, hi], jmp, _graded(singular, lo, hi, (hi - lo) / 4.0)])
    a, b = _intervals(pts, lo, hi)
    _, _, val, _, _, _, _ = _adaptive(f, a, b, rtol, atol, refinement_max, max_evals)
    return float(np.sum(val))


def integrate_line(f, *, window, jumps=(), singular=(), tail_exponent=None,
                   rtol=1e-6, atol=1e-12, refinement_max=40, tail_octaves=TAIL_OCTAVES,
                   max_evals=2_000_000, strict=True):
    """Integrate a nonnegative integrand ``f(u)`` over the real line.

    ``f`` must be vectorized over a 1-d array of u-values.  ``jumps`` and
    ``singular`` are u-locations where ``f`` is discontinuous or singular;
    intervals touching a singular point are geometrically graded toward it.
    """
    radius = window * np.exp(tail_octaves)
    a, b = _split_points(window, radius, jumps, singular)
    a, b, val, err, n_evals, n_bad, converged = _adaptive(
        f, a, b, rtol, atol, refinement_max, max_evals)
    notes = []
    if n_bad:
        notes.append(f"{n_bad} non-finite integrand values treated as 0")
    if tail_exponent is None:
        notes.append("unbounded-tail")
    tail, tail_err = _tail_estimate(a, b, val, window, radius, tail_exponent)
    value = float(np.sum(val) + tail)
    error = float(err.sum())
    if strict and not converged:
        raise QuadratureError(
            f"quadrature did not converge: error {error:.3g} after {n_evals} evaluations",
            partial=value, error=error)
    return LineIntegral(value, error, float(tail), float(tail_err), n_evals, converged,
                        tuple(notes))


def _effective_weights(grid, density):
    w = np.asarray(grid.weights, dtype=float)
    if density is None:
        return w.copy()
    return w * np.asarray(density(np.asarray(grid.x, dtype=float)), dtype=float)


def _integrate_nodes(grid, weights, integrand_at, breaks_at, tail_at, window, *,
                     rtol, atol, strict, full_output):
    node_vals = np.zeros(weights.size)
    node_err = np.zeros(weights.size)
    tails = np.zeros(weights.size)
    notes = []
    failed = []
    for i, (x, w) in enumerate(zip(np.asarray(grid.x, dtype=float), weights)):
        if w == 0.0:
            continue
        jumps, singular = breaks_at(x)
        res = integrate_line(integrand_at(x), window=window, jumps=jumps, singular=singular,
                             tail_exponent=tail_at(x), rtol=rtol, atol=atol,
                             refinement_max=grid.refinement_max, strict=False)
        node_vals[i] = res.value
        node_err[i] = res.error + res.tail_error
        tails[i] = res.tail
        if not res.converged:
            failed.append(i)
        for note in res.warnings:
            if note not in notes:
                notes.append(note)
    value = float(np.sum(weights * node_vals))
    error = float(np.sum(weights * node_err))
    if "unbounded-tail" in notes:
        warnings.warn("integrand has no declared tail exponent; truncated mass is "
                      "not bounded", TailWarning, stacklevel=3)
    if failed and strict:
        raise QuadratureError(
            f"quadrature did not converge at {len(failed)} x-node(s)", partial=value, error=error)
    if failed:
        notes.append(f"non-converged nodes: {failed}")
    if full_output:
        return value, CFInfo(value, error, float(np.sum(weights * tails)), node_vals, weights, notes)
    return value


def _combination_breaks(kernel, x, shifts, radius):
    span = max((abs(t) for t in shifts), default=0.0)
    jumps, singular = kernel.breakpoints(x, -radius - span, radius + span)
    jumps = np.asarray(jumps, dtype=float)
    singular = np.asarray(singular, dtype=float)
    all_j = [jumps - t for t in shifts]
    all_s = [singular - t for t in shifts]
    return np.concatenate(all_j), np.concatenate(all_s)


def cf_exponent(kernel, comb, grid, *, rtol=1e-6, atol=1e-12, strict=True,
                full_output=False, window=None):
    """``int_X int_R |sum_k theta_k G_{t_k}(x,u)|^alpha mu(dx) du`` by quadrature.

    Returns a float, or ``(value, CFInfo)`` when ``full_output`` is set.
    ``window`` overrides the grid's core u-window.
    """
    if not isinstance(comb, LinearCombination):
        comb = LinearCombination(*comb)
    alpha = kernel.alpha
    pairs = [(th, t) for th, t in zip(comb.theta, comb.times) if th != 0.0]
    weights = _effective_weights(grid, kernel.density)
    if not pairs:
        weights = np.zeros_like(weights)
    window = float(window or grid.u_window)
    radius = window * np.exp(TAIL_OCTAVES)
    shifts = sorted({0.0} | {t for _, t in pairs})

    def integrand_at(x):
        def h(u):
            acc = np.zeros_like(u)
            for th, t in pairs:
                acc += th * kernel.increment_at(x, t, u)
            return np.abs(acc) ** alpha
        return h

    return _integrate_nodes(
        grid, weights, integrand_at,
        lambda x: _combination_breaks(kernel, x, shifts, radius),
        kernel.tail_at, window, rtol=rtol, atol=atol, strict=strict, full_output=full_output)


def alpha_norm(f, alpha, grid, *, density=None, breakpoints=None, tail_exponent=None,
               rtol=1e-6, atol=1e-12, strict=True, full_output=False):
    """``int int |f(x,u)|^alpha mu(dx) du`` over the grid's x-nodes.

    ``f`` is either an increment returned by :func:`ssmma.kernels.increment_kernel`
    (its kernel supplies density, breakpoints and tail decay) or a plain
    vectorized callable ``f(x, u)``.  For plain callables ``breakpoints`` may be
    a sequence of u-locations or a callable ``x -> (jumps, singular)``.
    """
    kernel = getattr(f, "kernel", None)
    if kernel is not None and hasattr(f, "t"):
        shifts = sorted({0.0, float(f.t)})
        window = float(grid.u_window)
        radius = window * np.exp(TAIL_OCTAVES)
        weights = _effective_weights(grid, kernel.density)
        if f.t == 0.0:
            weights = np.zeros_like(weights)

        def integrand_at(x):
            return lambda u: np.abs(kernel.increment_at(x, f.t, u)) ** alpha

        return _integrate_nodes(
            grid, weights, integrand_at,
            lambda x: _combination_breaks(kernel, x, shifts, radius),
            kernel.tail_at, window, rtol=rtol, atol=atol, strict=strict,
            full_output=full_output)

    weights = _effective_weights(grid, density)
    if breakpoints is None:
        def breaks_at(x):
            return (), ()
    elif callable(breakpoints):
        breaks_at = breakpoints
    else:
        fixed = np.asarray(breakpoints, dtype=float)

        def breaks_at(x):
            return fixed, ()

    def integrand_at(x):
        return lambda u: np.abs(np.asarray(f(x, u), dtype=float)) ** alpha

    return _integrate_nodes(
        grid, weights, integrand_at, breaks_at, lambda x: tail_exponent,
        float(grid.u_window), rtol=rtol, atol=atol, strict=strict, full_output=full_output)
