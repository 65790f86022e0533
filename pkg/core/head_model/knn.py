"""
Nearest Vertex Search

Exact k-nearest-neighbour queries against a vertex cloud with the
inverse-distance weights used by inverse skinning.
"""

import numpy as np
from scipy.spatial import cKDTree

from core.errors import ContractError

DISTANCE_EPS = 1e-8
BRUTE_FORCE_LIMIT = 10_000
_QUERY_CHUNK = 512


class KnnIndex:
    """
    k-NN lookup over a fixed vertex array.

    Clouds up to ``BRUTE_FORCE_LIMIT`` vertices are scanned exhaustively in
    chunks with ties broken by vertex index; larger clouds use a KD-tree.
    """

    def __init__(self, vertices: np.ndarray):
        self.vertices = np.asarray(vertices, dtype=np.float64)
        self._tree = cKDTree(self.vertices) if len(self.vertices) > BRUTE_FORCE_LIMIT else None

    def __len__(self) -> int:
        return len(self.vertices)

    def nearest(self, points: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        """
        Returns:
            Tuple of (indices [M, k], distances [M, k]) sorted by distance
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if not 1 <= k <= len(self.vertices):
            raise ContractError(f"k must lie in [1, {len(self.vertices)}], got {k}")
        if self._tree is not None:
            dist, idx = self._tree.query(points, k=k)
            return idx.reshape(-1, k), dist.reshape(-1, k)

        indices = np.empty((len(points), k), dtype=np.int64)
        distances = np.empty((len(points), k))
        for start in range(0, len(points), _QUERY_CHUNK):
            chunk = points[start : start + _QUERY_CHUNK]
            dist = np.linalg.norm(chunk[:, None, :] - self.vertices[None, :, :], axis=-1)
            if k < len(self.vertices):
                candidates = np.argpartition(dist, k - 1, axis=1)[:, :k]
            else:
                candidates = np.broadcast_to(np.arange(k), dist.shape).copy()
            cand_dist = np.take_along_axis(dist, candidates, axis=1)
            order = np.lexsort((candidates, cand_dist), axis=1)
            chosen = np.take_along_axis(candidates, order, axis=1)
            indices[start : start + len(chunk)] = chosen
            distances[start : start + len(chunk)] = np.take_along_axis(dist, chosen, axis=1)
        return indices, distances

    def query(self, points: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        """
        Nearest vertices with normalized inverse-distance weights.

        Returns:
            Tuple of (indices [M, k], weights [M, k]); weights sum to 1
        """
        idx, dist = self.nearest(points, k)
        inv = 1.0 / (dist + DISTANCE_EPS)
        return idx, inv / inv.sum(axis=1, keepdims=True)


def knn_weights(
    x: np.ndarray, posed_vertices: np.ndarray, k: int = 4
) -> tuple[np.ndarray, np.ndarray]:
    """
    The k nearest posed vertices of a single point and their weights
    ``w_i ∝ 1 / (d_i + 1e-8)``.

    Returns:
        Tuple of (indices [k], weights [k])
    """
    idx, weights = KnnIndex(posed_vertices).query(np.asarray(x).reshape(1, 3), k)
    return idx[0], weights[0]
