"""scikit-learn style wrappers around reconstruction and the witness.

The functional API stays primary; these classes only hold parameters and
fitted results so they compose with ``get_params``/``clone``.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .nonclassicality import DEFAULT_DIMS, EIG_TOL, witness_tomogram
from .phase_space import Tomogram
from .tomography import TomogramSet, inverse_radon, radon_many

__all__ = ["as_tomogram", "as_tomogram_set", "WignerReconstructor", "NonclassicalityWitness"]


def as_tomogram(X, *, x=None, phi=0.0, s=0.0):
    """Accept a :class:`Tomogram` or a 1-D array of values on ``x``."""
    if isinstance(X, Tomogram):
        return X
    values = np.asarray(X, dtype=float)
    if values.ndim != 1:
        raise ValueError(f"expected a 1-D tomogram, got shape {values.shape}")
    if x is None or len(x) != values.size:
        raise ValueError("array input needs an x axis of matching length")
    return Tomogram(np.asarray(x, dtype=float), values, phi, s)


def as_tomogram_set(X, *, angles=None, x=None, s=0.0):
    """Accept a :class:`TomogramSet` or an ``(n_angles, n_x)`` array."""
    if isinstance(X, TomogramSet):
        return X
    values = np.asarray(X, dtype=float)
    if values.ndim != 2:
        raise ValueError(f"expected an (n_angles, n_x) array, got shape {values.shape}")
    if angles is None or len(angles) != values.shape[0]:
        raise ValueError("array input needs one angle per row")
    if x is None or len(x) != values.shape[1]:
        raise ValueError("array input needs an x axis matching the columns")
    toms = sorted((Tomogram(np.asarray(x, dtype=float), row, float(a), s) for row, a in zip(values, angles)),
                  key=lambda t: t.phi)
    return TomogramSet(tuple(toms))


class WignerReconstructor(BaseEstimator):
    """Filtered back-projection of a tomogram set onto ``grid``.

    After ``fit``: ``wigner_`` (a ``QuasiDistribution`` at the input order),
    ``order_`` and ``n_angles_``.
    """

    def __init__(self, grid=None, cutoff=0.9):
        self.grid = grid
        self.cutoff = cutoff

    def fit(self, X, y=None, *, angles=None, x=None, s=0.0):
        ts = as_tomogram_set(X, angles=angles, x=x, s=s)
        self.wigner_ = inverse_radon(ts, self.grid, cutoff=self.cutoff)
        self.order_ = ts.s
        self.n_angles_ = len(ts)
        return self

    def score(self, X, y=None, *, angles=None, x=None, s=0.0):
        """Negative relative L2 misfit between ``X`` and the reprojected reconstruction."""
        check_is_fitted(self, "wigner_")
        ts = as_tomogram_set(X, angles=angles, x=x, s=s)
        proj = radon_many(self.wigner_, ts.angles, ts.x_values).matrix()
        data = ts.matrix()
        return -float(np.linalg.norm(proj - data) / np.linalg.norm(data))


class NonclassicalityWitness(BaseEstimator):
    """Demarginalization witness on a single tomogram.

    ``fit`` stores the reports for one tomogram (``first_``, ``second_``,
    ``verdict_``); ``predict`` returns one verdict per tomogram in ``X``.
    """

    def __init__(self, dims=DEFAULT_DIMS, tol=EIG_TOL, vacuum_order=None, first_map=True):
        self.dims = dims
        self.tol = tol
        self.vacuum_order = vacuum_order
        self.first_map = first_map

    def _witness(self, t):
        return witness_tomogram(
            t, dims=tuple(self.dims), tol=self.tol, vacuum_order=self.vacuum_order, first_map=self.first_map,
        )

    def fit(self, X, y=None, *, x=None, phi=0.0, s=0.0):
        result = self._witness(as_tomogram(X, x=x, phi=phi, s=s))
        self.result_ = result
        self.first_ = result.first
        self.second_ = result.second
        self.verdict_ = result.verdict
        return self

    def predict(self, X):
        check_is_fitted(self, "verdict_")
        return np.array([self._witness(as_tomogram(t)).verdict for t in X], dtype=object)
