"""Linear hat-weight density filter on element centroids."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from vemtopo.mesh.core import PolygonalMesh, centroid_distance_table


@dataclass
class FilterOperator:
    """Row-stochastic W with W[E, E'] proportional to max(0, r_min - dist(E, E'))."""

    weights: sp.csr_matrix
    r_min: float
    d_m: float

    def apply(self, raw: np.ndarray) -> np.ndarray:
        return self.weights @ np.asarray(raw, dtype=float)

    def chain(self, grad_physical: np.ndarray) -> np.ndarray:
        """Gradient with respect to the raw variables."""
        return self.weights.T @ np.asarray(grad_physical, dtype=float)

    @property
    def is_identity(self) -> bool:
        return self.weights.nnz == self.weights.shape[0]


def build_filter(mesh: PolygonalMesh, r_min: float) -> FilterOperator:
    if not r_min > 0:
        raise ValueError("r_min must be positive")
    rows, cols, dist = centroid_distance_table(mesh, r_min)
    w = r_min - dist
    n = mesh.n_elements
    H = sp.csr_matrix((w, (rows, cols)), shape=(n, n))
    row_sum = np.asarray(H.sum(axis=1)).ravel()
    W = sp.diags(1.0 / row_sum) @ H
    return FilterOperator(W.tocsr(), float(r_min), mesh.mean_size)


def identity_filter(mesh: PolygonalMesh) -> FilterOperator:
    n = mesh.n_elements
    return FilterOperator(sp.identity(n, format="csr"), 0.0, mesh.mean_size)
