"""Input validation helpers shared by the public API."""

import hashlib
import numbers

import numpy as np


class ParameterError(ValueError):
    """Raised when a model parameter lies outside its admissible range."""


def check_alpha(alpha):
    if not isinstance(alpha, numbers.Real) or not np.isfinite(alpha):
        raise ParameterError(f"alpha must be a finite real, got {alpha!r}")
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")
    return float(alpha)


def check_hurst(hurst, upper=1.0):
    if not isinstance(hurst, numbers.Real) or not np.isfinite(hurst):
        raise ParameterError(f"hurst must be a finite real, got {hurst!r}")
    if not 0.0 < hurst < upper:
        raise ParameterError(f"hurst must lie in (0, {upper}), got {hurst}")
    return float(hurst)


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ParameterError(f"{name} must be a finite real, got {value!r}")
    if value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ParameterError(f"{name} must be {bound}, got {value}")
    return float(value)


def check_count(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def as_float_array(values, name, ndim=1, allow_empty=False):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


def derive_key(seed, purpose):
    """Deterministic 64-bit sub-stream key from ``(seed, purpose)``.

    Used everywhere a seeded component needs its own independent stream, so a
    single user seed reproduces a whole run.
    """
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise ParameterError(f"seed must be an integer, got {seed!r}")
    digest = hashlib.blake2b(f"{int(seed)}|{purpose}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")
