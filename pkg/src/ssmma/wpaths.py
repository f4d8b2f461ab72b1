"""Stationary path processes W feeding the fourth-kind kernel."""

from dataclasses import dataclass

import numpy as np

from ._validation import ParameterError, as_float_array, check_count, check_positive, derive_key

WPROCESS_KINDS = ("ornstein_uhlenbeck",)


@dataclass(frozen=True)
class WProcessSpec:
    """Stationary Gaussian OU process ``dW = -lambda W dt + sigma sqrt(2 lambda) dB``.

    ``holder_p`` is the exponent in ``E|W(t) - W(s)|^alpha <= C |t - s|^(2p)``.
    For OU the increment variance is linear at small lags, so ``p = alpha / 4``;
    leave ``holder_p`` as None to have it derived from alpha.
    """

    kind: str = "ornstein_uhlenbeck"
    mean_reversion: float = 1.0
    stationary_std: float = 1.0
    holder_p: float = None

    def __post_init__(self):
        if self.kind not in WPROCESS_KINDS:
            raise ParameterError(f"unknown W-process kind {self.kind!r}; known: {WPROCESS_KINDS}")
        check_positive(self.mean_reversion, "mean_reversion")
        check_positive(self.stationary_std, "stationary_std")
        if self.holder_p is not None:
            check_positive(self.holder_p, "holder_p")

    def holder_exponent(self, alpha):
        if self.holder_p is not None:
            return float(self.holder_p)
        return alpha / 4.0

    def autocovariance(self, lag):
        return self.stationary_std ** 2 * np.exp(-self.mean_reversion * np.abs(lag))


def sample_w_paths(spec, time_grid, n_paths, seed):
    """Exact OU paths on an increasing ``time_grid``, one row per path.

    The first value is drawn from the stationary law N(0, std^2); each step
    uses the exact Gaussian transition, so irregular grids are fine.
    """
    if not isinstance(spec, WProcessSpec):
        raise ParameterError("spec must be a WProcessSpec")
    times = as_float_array(time_grid, "time_grid")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time_grid must be strictly increasing")
    n_paths = check_count(n_paths, "n_paths")
    rng = np.random.Generator(np.random.Philox(key=derive_key(seed, "w-paths")))
    z = rng.standard_normal((n_paths, times.size))
    decay = np.exp(-spec.mean_reversion * np.diff(times))
    innov = spec.stationary_std * np.sqrt(-np.expm1(-2 * spec.mean_reversion * np.diff(times)))
    out = np.empty((n_paths, times.size))
    out[:, 0] = spec.stationary_std * z[:, 0]
    for k in range(1, times.size):
        out[:, k] = decay[k - 1] * out[:, k - 1] + innov[k - 1] * z[:, k]
    return out
