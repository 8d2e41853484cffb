"""Input validation helpers shared by the public functions and estimators."""

import numbers

import numpy as np


class InvalidStateError(ValueError):
    """Raised when a matrix is not a valid density operator."""


class GridMismatchError(ValueError):
    """Raised when two distributions live on different grids."""


class OrderMismatchError(ValueError):
    """Raised when distributions carry incompatible order parameters."""


class ConvergenceError(RuntimeError):
    """Raised when a numerical solve cannot meet its tolerance."""


class TruncationWarning(UserWarning):
    """Fock truncation is not converged for the requested accuracy."""


class SparseAngleWarning(UserWarning):
    """Too few projection angles for a good reconstruction."""


def check_order(s, *, name="s", allow_one=False):
    """Return ``s`` as float after checking it lies in [-1, 1) (or [-1, 1])."""
    if not isinstance(s, numbers.Real) or not np.isfinite(s):
        raise ValueError(f"{name} must be a finite real number, got {s!r}")
    s = float(s)
    upper_ok = s <= 1.0 if allow_one else s < 1.0
    if s < -1.0 or not upper_ok:
        bound = "[-1, 1]" if allow_one else "[-1, 1)"
        raise ValueError(f"{name}={s} outside {bound}")
    return s


def check_index(n, name):
    if not isinstance(n, numbers.Integral) or isinstance(n, bool):
        raise TypeError(f"{name} must be an integer, got {type(n).__name__}")
    if n < 0:
        raise ValueError(f"{name} must be non-negative, got {n}")
    return int(n)


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_uniform(x, name="x", rtol=1e-9):
    """Check that ``x`` is a strictly increasing, uniformly spaced 1-D array."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError(f"{name} must be a 1-D array with at least two points")
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    if not np.allclose(dx, dx[0], rtol=rtol, atol=0.0):
        raise ValueError(f"{name} must be uniformly spaced")
    return x


def check_psd(matrix, name, tol=1e-12):
    """Validate a real symmetric positive-semidefinite matrix and return it."""
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if not np.allclose(m, m.T, atol=tol):
        raise ValueError(f"{name} must be symmetric")
    m = 0.5 * (m + m.T)
    if np.linalg.eigvalsh(m).min() < -tol:
        raise ValueError(f"{name} must be positive semidefinite")
    return m


def readonly(array, dtype=float):
    """Return a C-contiguous read-only copy of ``array``."""
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out
