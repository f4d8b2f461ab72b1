"""Symmetric alpha-stable variates and empirical characteristic functions."""

from dataclasses import dataclass

import numpy as np

from ._validation import ParameterError, check_alpha, check_count, check_positive


@dataclass(frozen=True)
class StableParams:
    """SaS law with characteristic function ``exp(-scale**alpha * |theta|**alpha)``."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        check_alpha(self.alpha)
        check_positive(self.scale, "scale", strict=False)


def sas_from_uniforms(u1, u2, alpha):
    """Map two independent U[0, 1) arrays to standard SaS(alpha) draws.

    Chambers-Mallows-Stuck transform with zero skew: ``V = pi (u1 - 1/2)`` is
    uniform on (-pi/2, pi/2) and ``W = -log(1 - u2)`` is standard exponential.
    The alpha = 1 branch reduces to ``tan(V)`` (standard Cauchy).
    """
    alpha = check_alpha(alpha)
    v = np.pi * (np.asarray(u1, dtype=float) - 0.5)
    w = -np.log1p(-np.asarray(u2, dtype=float))
    if alpha == 1.0:
        return np.tan(v)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
               * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha))
    # w == 0 or v == -pi/2 only occur with probability ~2**-53
    return np.where(np.isfinite(out), out, 0.0)


def sample_sas(params, n, seed):
    """Draw ``n`` independent SaS(alpha, scale) variates.

    The stream is a Philox generator keyed by ``seed``; identical seeds give
    bit-identical output.
    """
    if not isinstance(params, StableParams):
        raise ParameterError("params must be a StableParams instance")
    n = check_count(n, "n")
    rng = np.random.Generator(np.random.Philox(key=int(seed) % 2**128))
    u = rng.random((n, 2))
    if params.scale == 0.0:
        return np.zeros(n)
    return params.scale * sas_from_uniforms(u[:, 0], u[:, 1], params.alpha)


def empirical_cf(samples, theta):
    """Empirical characteristic function ``mean(exp(i * theta * samples))``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empirical_cf needs at least one sample")
    arg = float(theta) * x
    return complex(np.mean(np.cos(arg)), np.mean(np.sin(arg)))


def sas_cf(theta, alpha, scale=1.0):
    """Closed-form SaS characteristic function."""
    theta = np.asarray(theta, dtype=float)
    return np.exp(-(scale ** alpha) * np.abs(theta) ** alpha)
