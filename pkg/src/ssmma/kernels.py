"""Kernel functions G(x, u) of self-similar mixed moving averages.

A :class:`KernelSpec` bundles G with its parameter space X, the density of
the control measure on X, the exponents alpha / H / kappa = H - 1/alpha, and
the quadrature hints (discontinuities, singular points, tail decay) that the
integrators need.  Built-in families: mixed linear fractional stable motion,
the log-periodic example on [0, 1), the fourth-kind kernel built from
stationary OU paths, and a synthetic dissipative kernel.
"""

from dataclasses import dataclass, field, replace
import math
from typing import Callable, Mapping

import numpy as np

from ._validation import (ParameterError, as_float_array, check_alpha, check_count,
                          check_hurst, check_positive)
from .wpaths import WProcessSpec, sample_w_paths

KAPPA_ZERO_TOL = 1e-12


# X descriptors ---------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Interval ``[lo, hi)`` with Lebesgue base measure."""

    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or self.hi <= self.lo:
            raise ParameterError(f"invalid interval [{self.lo}, {self.hi})")

    @property
    def mass(self):
        return self.hi - self.lo

    def nodes(self, n):
        n = check_count(n, "n_x")
        h = self.mass / n
        return self.lo + (np.arange(n) + 0.5) * h, np.full(n, h)


@dataclass(frozen=True, eq=False)
class FiniteSet:
    """Finitely many points with nonnegative weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = as_float_array(self.points, "points")
        w = as_float_array(self.weights, "weights")
        if pts.shape != w.shape or np.any(w < 0):
            raise ParameterError("weights must be nonnegative and match points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def mass(self):
        return float(self.weights.sum())

    def nodes(self, n=None):
        return self.points.copy(), self.weights.copy()


@dataclass(frozen=True, eq=False)
class PathSample:
    """Empirical measure over sampled paths ``w_i(s)`` on a log-time grid.

    Point ``x = i`` denotes path ``i``; each carries weight ``1/n_paths``.
    Paths are linearly interpolated and held constant outside the grid.
    """

    paths: np.ndarray
    log_times: np.ndarray

    @property
    def n_paths(self):
        return self.paths.shape[0]

    @property
    def mass(self):
        return 1.0

    def nodes(self, n=None):
        n_paths = self.n_paths
        return np.arange(n_paths, dtype=float), np.full(n_paths, 1.0 / n_paths)

    def index(self, x):
        idx = np.rint(np.asarray(x, dtype=float)).astype(int)
        if np.any(idx < 0) or np.any(idx >= self.n_paths):
            raise IndexError("path index out of range")
        return idx

    def _interp(self, i, s):
        grid = self.log_times
        step = (grid[-1] - grid[0]) / (grid.size - 1)
        pos = np.clip((s - grid[0]) / step, 0.0, grid.size - 1.0)
        k = np.minimum(pos.astype(np.intp), grid.size - 2)
        frac = pos - k
        path = self.paths[i]
        return path[k] + frac * (path[k + 1] - path[k])

    def values(self, x, s):
        """``w_x(s)``; x and s broadcast together (log-times must be uniform)."""
        s = np.asarray(s, dtype=float)
        if np.ndim(x) == 0:
            return self._interp(int(self.index(x)), s)
        idx, s = np.broadcast_arrays(self.index(x), s)
        out = np.empty(s.shape)
        for i in np.unique(idx):
            sel = idx == i
            out[sel] = self._interp(i, s[sel])
        return out


# flows -------------------------------------------------------------------------

def _zeros(c, x):
    return np.zeros(np.broadcast(np.asarray(c), np.asarray(x)).shape)


def _ones(c, x):
    return np.ones(np.broadcast(np.asarray(c), np.asarray(x)).shape)


@dataclass(frozen=True)
class FlowSpec:
    """Multiplicative flow ``psi_c`` with cocycle, semi-additive functional,
    generation remainder ``j_c`` and Radon-Nikodym factor ``d(mu o psi_c)/dmu``.

    ``circular`` marks a flow on the circle [0, 1): comparisons of psi are then
    made modulo 1.
    """

    psi: Callable
    cocycle_b: Callable = _ones
    semiadd_g: Callable = _zeros
    remainder_j: Callable = _zeros
    radon_nikodym: Callable = _ones
    circular: bool = False
    label: str = "flow"


def identity_flow(remainder_j=None):
    return FlowSpec(psi=lambda c, x: np.broadcast_to(np.asarray(x, dtype=float),
                                                      np.broadcast(c, x).shape).copy(),
                    remainder_j=remainder_j or _zeros, label="identity")


def rotation_flow():
    """``psi_c(x) = {x + ln c}`` on [0, 1), unit cocycle, no shift."""
    return FlowSpec(psi=lambda c, x: np.mod(np.asarray(x, dtype=float) + np.log(c), 1.0),
                    circular=True, label="rotation")


def broken_rotation_flow():
    """``{x + (ln c)^2}``: violates the group law; a negative control."""
    return FlowSpec(psi=lambda c, x: np.mod(np.asarray(x, dtype=float) + np.log(c) ** 2, 1.0),
                    circular=True, label="broken-demo")


# kernel container ----------------------------------------------------------------

def _no_breaks(x, lo, hi):
    return np.empty(0), np.empty(0)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Kernel G(x, u) with its parameter space and quadrature hints.

    ``G(x, u)`` must be vectorized (x and u broadcast).  ``measure_density``
    is the density of mu relative to the base measure of ``space``.
    ``breakpoints(x, lo, hi)`` returns ``(jumps, singular)``: u-locations in
    ``[lo, hi]`` where G(x, .) jumps or blows up.  ``tail_exponent`` is p with
    ``|G_t(x, u)|^alpha = O(|u|^-p)``; it may be a callable of x, ``inf`` for
    compact support, or None (undeclared).
    """

    G: Callable
    alpha: float
    hurst: float
    space: object = field(default_factory=Interval)
    label: str = "kernel"
    tail_exponent: object = None
    measure_density: Callable = None
    breakpoints_fn: Callable = _no_breaks
    increment_fn: Callable = None
    flow: FlowSpec = None
    params: Mapping = field(default_factory=dict)
    kappa: float = field(init=False)

    def __post_init__(self):
        check_alpha(self.alpha)
        check_positive(self.hurst, "hurst")
        object.__setattr__(self, "kappa", self.hurst - 1.0 / self.alpha)

    def __call__(self, x, u):
        return self.G(x, u)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        if self.measure_density is None:
            return np.ones(x.shape)
        return np.asarray(self.measure_density(x), dtype=float) * np.ones(x.shape)

    def increment_at(self, x, t, u):
        """``G(x, t + u) - G(x, u)``."""
        if t == 0:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(u)).shape)
        if self.increment_fn is not None:
            return self.increment_fn(x, t, u)
        u = np.asarray(u, dtype=float)
        return self.G(x, t + u) - self.G(x, u)

    def breakpoints(self, x, lo, hi):
        jumps, singular = self.breakpoints_fn(x, lo, hi)
        return np.asarray(jumps, dtype=float), np.asarray(singular, dtype=float)

    def tail_at(self, x):
        if callable(self.tail_exponent):
            return self.tail_exponent(x)
        return self.tail_exponent

    def nodes(self, n_x=64):
        return self.space.nodes(n_x)


class Increment:
    """The increment kernel ``G_t(x, u) = G(x, t + u) - G(x, u)``."""

    def __init__(self, kernel, t):
        t = float(t)
        if not np.isfinite(t):
            raise ValueError("t must be finite")
        self.kernel = kernel
        self.t = t

    def __call__(self, x, u):
        return self.kernel.increment_at(x, self.t, u)

    def __repr__(self):
        return f"Increment({self.kernel.label!r}, t={self.t})"


def increment_kernel(kernel, t):
    return Increment(kernel, t)


def restrict(kernel, keep):
    """Same G with the measure density multiplied by ``1{keep(x)}``."""
    base = kernel.density

    def density(x):
        mask = np.asarray(keep(np.asarray(x, dtype=float)), dtype=bool)
        return np.where(mask, base(x), 0.0)

    return replace(kernel, measure_density=density, label=f"{kernel.label}|restricted")


# grids ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridSpec:
    """x-nodes with base-measure weights, plus the u-window and step.

    The kernel's measure density multiplies the weights at integration time.
    Regular u-nodes sit at cell midpoints ``-U + (j + 1/2) du`` so that u = 0
    is never a node.
    """

    x: np.ndarray
    weights: np.ndarray
    u_window: float = 50.0
    u_step: float = 0.05
    refinement_max: int = 40

    def __post_init__(self):
        x = as_float_array(self.x, "x")
        w = as_float_array(self.weights, "weights")
        if x.shape != w.shape:
            raise ValueError("x and weights must have equal lengths")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        check_positive(self.u_window, "u_window")
        check_positive(self.u_step, "u_step")
        if self.u_step >= self.u_window:
            raise ValueError("u_step must be smaller than u_window")
        check_count(self.refinement_max, "refinement_max")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "weights", w)

    @classmethod
    def for_kernel(cls, kernel, n_x=64, **kwargs):
        x, w = kernel.nodes(n_x)
        return cls(x, w, **kwargs)

    @property
    def x_nodes(self):
        return list(zip(self.x.tolist(), self.weights.tolist()))

    @property
    def n_x(self):
        return self.x.size

    def u_nodes(self, window=None):
        window = self.u_window if window is None else window
        n = int(round(2 * window / self.u_step))
        return -window + (np.arange(n) + 0.5) * (2 * window / n)

    def matches(self, other):
        return (np.array_equal(self.x, other.x) and np.array_equal(self.weights, other.weights)
                and self.u_window == other.u_window and self.u_step == other.u_step)

    def with_options(self, **changes):
        return replace(self, **changes)


# built-in families -----------------------------------------------------------------

def _as_function(F, name):
    if callable(F):
        return F
    value = float(F)
    if not np.isfinite(value):
        raise ParameterError(f"{name} must be finite")
    return lambda x: np.full(np.shape(x), value)


def _pos_power(v, kappa):
    """``v_+^kappa`` with the convention 0 for ``v <= 0``."""
    v = np.asarray(v, dtype=float)
    pos = v > 0
    return np.where(pos, np.abs(np.where(pos, v, 1.0)) ** kappa, 0.0)


def _power_increment(u, t, kappa):
    """``(t + u)_+^kappa - u_+^kappa`` without cancellation when both are positive."""
    u = np.asarray(u, dtype=float)
    both = (u > 0) & (u + t > 0)
    safe = np.where(both, u, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = safe ** kappa * np.expm1(kappa * np.log1p(np.where(both, t / safe, 0.0)))
    return np.where(both, stable, _pos_power(t + u, kappa) - _pos_power(u, kappa))


def make_mixed_lfsm(F1=1.0, F2=0.0, alpha=1.5, hurst=0.5, space=None, force_branch=None):
    """Mixed linear fractional stable motion kernel.

    ``G(x, u) = F1(x) u_+^kappa + F2(x) u_-^kappa`` for kappa != 0 and
    ``F1(x) ln|u| + F2(x) 1{u > 0}`` for kappa = 0 (u_+^kappa is 0 for u <= 0;
    G(x, 0) = 0 in the log branch).  kappa is treated as zero when
    ``|kappa| < 1e-12``; ``force_branch`` in {"power", "log"} overrides that.
    """
    alpha = check_alpha(alpha)
    hurst = check_hurst(hurst)
    kappa = hurst - 1.0 / alpha
    if kappa >= 1:
        raise ParameterError("kappa >= 1: increments are not in L^alpha")
    if force_branch not in (None, "power", "log"):
        raise ParameterError("force_branch must be 'power', 'log' or None")
    log_branch = abs(kappa) < KAPPA_ZERO_TOL if force_branch is None else force_branch == "log"
    f1 = _as_function(F1, "F1")
    f2 = _as_function(F2, "F2")
    space = space or Interval()

    if log_branch:
        def G(x, u):
            x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
            nz = u != 0
            logu = np.where(nz, np.log(np.abs(np.where(nz, u, 1.0))), 0.0)
            return np.where(nz, f1(x) * logu + f2(x) * (u > 0), 0.0)

        def increment(x, t, u):
            return G(x, t + np.asarray(u, dtype=float)) - G(x, u)

        def remainder(c, x):
            return f1(np.asarray(x, dtype=float)) * np.log(c)
    else:
        def G(x, u):
            x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
            return f1(x) * _pos_power(u, kappa) + f2(x) * _pos_power(-u, kappa)

        def increment(x, t, u):
            x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
            return (f1(x) * _power_increment(u, t, kappa)
                    + f2(x) * _power_increment(-u, -t, kappa))

        remainder = None

    def breaks(x, lo, hi):
        if kappa > 0 and not log_branch:
            return np.array([0.0]), np.empty(0)
        return np.empty(0), np.array([0.0])

    label = "mixed-lfsm"
    return KernelSpec(G=G, alpha=alpha, hurst=hurst, space=space, label=label,
                      tail_exponent=(1.0 - (0.0 if log_branch else kappa)) * alpha,
                      breakpoints_fn=breaks, increment_fn=increment,
                      flow=identity_flow(remainder),
                      params={"F1": F1 if not callable(F1) else "callable",
                              "F2": F2 if not callable(F2) else "callable",
                              "branch": "log" if log_branch else "power"})


def make_periodic_example(alpha=1.5, hurst=0.5):
    """Log-periodic kernel ``G(x, u) = u_+^kappa 1_[0,1/2)({x + ln|u|})`` on [0, 1).

    Satisfies ``G(x, e u) = e^kappa G(x, u)`` and is generated by the rotation
    flow ``{x + ln c}``.  Requires kappa < 0.
    """
    alpha = check_alpha(alpha)
    hurst = check_positive(hurst, "hurst")
    kappa = hurst - 1.0 / alpha
    if kappa >= 0:
        raise ParameterError("the periodic example needs kappa = H - 1/alpha < 0")
    # jumps closer to 0 than eps carry mass below ~1e-12 of |G_t|^alpha
    eps = 10.0 ** (-12.0 / (hurst * alpha))

    def G(x, u):
        x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
        pos = u > 0
        safe = np.where(pos, u, 1.0)
        ind = np.mod(x + np.log(safe), 1.0) < 0.5
        return np.where(pos & ind, safe ** kappa, 0.0)

    def breaks(x, lo, hi):
        lo = max(lo, eps)
        if hi <= lo:
            return np.empty(0), np.array([0.0])
        k0 = math.ceil(2 * (math.log(lo) + x))
        k1 = math.floor(2 * (math.log(hi) + x))
        return np.exp(np.arange(k0, k1 + 1) / 2.0 - x), np.array([0.0])

    return KernelSpec(G=G, alpha=alpha, hurst=hurst, space=Interval(0.0, 1.0),
                      label="periodic-example", tail_exponent=1.0 - kappa * alpha,
                      breakpoints_fn=breaks, flow=rotation_flow())


def make_fourth_kind(w=None, alpha=1.5, hurst=0.3, n_paths=200, seed=0,
                     log_time_window=40.0, log_time_step=0.02):
    """Fourth-kind kernel ``G(w, u) = |u|^kappa w(ln|u|)`` over sampled W-paths.

    X is the empirical measure of ``n_paths`` stationary paths on a log-time
    grid ``[-T, T]``; G(w, 0) = 0.  The infrared-corrected construction
    states the process with ``|t + u|^H``, while the kernel used in the flow
    verification and in the well-posedness argument carries ``|u|^kappa``.
    The two exponents disagree; this kernel implements the kappa version.
    """
    w = w or WProcessSpec()
    if not isinstance(w, WProcessSpec):
        raise ParameterError("w must be a WProcessSpec")
    alpha = check_alpha(alpha)
    hurst = check_positive(hurst, "hurst")
    p = w.holder_exponent(alpha)
    if hurst >= min(p, 1.0):
        raise ParameterError(
            f"hurst must be < min(p, 1) = {min(p, 1.0):.6g} for the fourth-kind "
            "process to be well defined (moment condition on W with p = alpha/4 for OU)")
    n_paths = check_count(n_paths, "n_paths")
    kappa = hurst - 1.0 / alpha
    grid = np.arange(-log_time_window, log_time_window + 0.5 * log_time_step, log_time_step)
    space = PathSample(sample_w_paths(w, grid, n_paths, seed), grid)

    def G(x, u):
        a = np.abs(np.asarray(u, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            la = np.log(a)
            out = np.exp(kappa * la) * space.values(x, la)
        return np.where(a > 0, out, 0.0)

    def breaks(x, lo, hi):
        return np.empty(0), np.array([0.0])

    return KernelSpec(G=G, alpha=alpha, hurst=hurst, space=space, label="fourth-kind",
                      tail_exponent=(1.0 - kappa) * alpha, breakpoints_fn=breaks,
                      params={"holder_p": p, "n_paths": n_paths, "seed": seed,
                              "mean_reversion": w.mean_reversion,
                              "stationary_std": w.stationary_std})


def make_dissipative_synthetic(alpha=1.5, hurst=0.5):
    """``G(x, u) = exp(-|u|)`` on [0, 1): exercises the finite Hopf branch only.

    Not a self-similar kernel; ``hurst`` just fixes the c-weight of the test.
    """
    alpha = check_alpha(alpha)
    hurst = check_positive(hurst, "hurst")

    def G(x, u):
        x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
        return np.exp(-np.abs(u))

    def breaks(x, lo, hi):
        return np.empty(0), np.array([0.0])

    return KernelSpec(G=G, alpha=alpha, hurst=hurst, space=Interval(0.0, 1.0),
                      label="dissipative-synthetic", tail_exponent=np.inf,
                      breakpoints_fn=breaks)


def concat_kernels(first, second, label=None):
    """Kernel on the disjoint union of two interval-based kernels.

    ``second`` is shifted to start where ``first`` ends.  Both must share
    alpha and H.  A flow is attached when both parts carry one.
    """
    if not (isinstance(first.space, Interval) and isinstance(second.space, Interval)):
        raise ParameterError("concatenation needs interval spaces")
    if first.alpha != second.alpha or first.hurst != second.hurst:
        raise ParameterError("concatenated kernels must share alpha and hurst")
    split = first.space.hi
    shift = second.space.lo - split

    def pick(x, f1, f2):
        x = np.asarray(x, dtype=float)
        lower = x < split
        return np.where(lower, f1(x), f2(x + shift))

    def G(x, u):
        x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
        lower = x < split
        return np.where(lower, first.G(x, u), second.G(x + shift, u))

    def increment(x, t, u):
        x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
        lower = x < split
        return np.where(lower, first.increment_at(x, t, u), second.increment_at(x + shift, t, u))

    def density(x):
        return pick(x, first.density, second.density)

    def breaks(x, lo, hi):
        if x < split:
            return first.breakpoints(x, lo, hi)
        return second.breakpoints(x + shift, lo, hi)

    def tail(x):
        return first.tail_at(x) if x < split else second.tail_at(x + shift)

    flow = None
    if first.flow is not None and second.flow is not None:
        f, s = first.flow, second.flow

        def part(fa, fb):
            def call(c, x):
                c, x = np.broadcast_arrays(np.asarray(c, dtype=float), np.asarray(x, dtype=float))
                lower = x < split
                return np.where(lower, fa(c, x), fb(c, x + shift))
            return call

        psi_b = part(f.psi, lambda c, x: s.psi(c, x) - shift)
        flow = FlowSpec(psi=psi_b, cocycle_b=part(f.cocycle_b, s.cocycle_b),
                        semiadd_g=part(f.semiadd_g, s.semiadd_g),
                        remainder_j=part(f.remainder_j, s.remainder_j),
                        radon_nikodym=part(f.radon_nikodym, s.radon_nikodym),
                        circular=f.circular or s.circular, label=f"{f.label}+{s.label}")

    return KernelSpec(G=G, alpha=first.alpha, hurst=first.hurst,
                      space=Interval(first.space.lo, split + second.space.mass),
                      label=label or f"{first.label}+{second.label}",
                      tail_exponent=tail, measure_density=density, breakpoints_fn=breaks,
                      increment_fn=increment, flow=flow, params={"split": split})


def make_lfsm_periodic_concat(alpha=1.5, hurst=0.5, F1=1.0, F2=2.0):
    """Mixed LFSM on [0, 1) joined with the periodic example on [1, 2)."""
    return concat_kernels(make_mixed_lfsm(F1, F2, alpha, hurst), make_periodic_example(alpha, hurst),
                          label="lfsm-periodic-concat")


def make_zero_kernel(alpha=1.5, hurst=0.5):
    def G(x, u):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(u)).shape)

    return KernelSpec(G=G, alpha=alpha, hurst=hurst, label="zero", tail_exponent=np.inf,
                      flow=identity_flow())


def with_flow(kernel, flow):
    return replace(kernel, flow=flow)


REGISTRY = {
    "mixed-lfsm": make_mixed_lfsm,
    "periodic-example": make_periodic_example,
    "fourth-kind": make_fourth_kind,
    "dissipative-synthetic": make_dissipative_synthetic,
    "lfsm-periodic-concat": make_lfsm_periodic_concat,
}
