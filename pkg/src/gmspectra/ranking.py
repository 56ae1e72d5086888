"""PageRank / CheiRank by power iteration, rank permutations, plateaus.

CheiRank is PageRank of the link-inverted graph, computed by the same code
path so the two are bitwise interchangeable.
"""

from __future__ import annotations

import os
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .graph import CacheChecksumError, CacheFormatError, CacheTruncatedError, \
    CacheVersionError, DirectedGraph, invert
from .operator import DEFAULT_ALPHA, GoogleOperator

VECTOR_MAGIC = b"SNRV"
VECTOR_VERSION = 1
_VEC_HEADER = struct.Struct("<4sIQ")

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 1000


@dataclass(frozen=True)
class RankVector:
    """Probability vector with its decreasing-order rank permutation.

    ``rank_of_node[i]`` is the 1-based rank of node i; ``node_at_rank[k]``
    the node holding rank k+1. Ties break by ascending node id.
    """

    probabilities: np.ndarray
    rank_of_node: np.ndarray
    node_at_rank: np.ndarray
    iterations_used: int
    residual: float
    converged: bool

    @property
    def node_count(self) -> int:
        return self.probabilities.size

    def probability_at_rank(self, k: int) -> float:
        """Probability of the node at 1-based rank k."""
        return float(self.probabilities[self.node_at_rank[k - 1]])


@dataclass(frozen=True)
class Plateau:
    value: float
    first_rank: int  # 1-based, inclusive
    last_rank: int
    multiplicity: int


@dataclass(frozen=True)
class PlateauReport:
    plateaus: list[Plateau]

    def __len__(self):
        return len(self.plateaus)

    def __iter__(self):
        return iter(self.plateaus)


def rank_indices(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stable descending-probability permutations (rank_of_node, node_at_rank)."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(np.isnan(p)):
        raise ValueError("probability vector contains NaN")
    node_at_rank = np.argsort(-p, kind="stable").astype(np.int64)
    rank_of_node = np.empty_like(node_at_rank)
    rank_of_node[node_at_rank] = np.arange(1, p.size + 1, dtype=np.int64)
    return rank_of_node, node_at_rank


def _rank_vector(p, iterations, residual, converged) -> RankVector:
    rank_of_node, node_at_rank = rank_indices(p)
    return RankVector(p, rank_of_node, node_at_rank, iterations, residual, converged)


def pagerank(g: DirectedGraph, alpha: float = DEFAULT_ALPHA, tol: float = DEFAULT_TOL,
             max_iter: int = DEFAULT_MAX_ITER, threads: int = 1) -> RankVector:
    """Power iteration v <- G v from the uniform vector until the 1-norm of
    the update drops below tol. Non-convergence is reported, not raised."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    op = GoogleOperator(g, alpha=alpha, threads=threads)
    n = g.node_count
    v = np.full(n, 1.0 / n)
    residual = np.inf
    for it in range(1, max_iter + 1):
        nxt = op.apply_g(v)
        residual = float(np.sum(np.abs(nxt - v)))
        v = nxt
        if residual < tol:
            return _rank_vector(v, it, residual, True)
    return _rank_vector(v, max_iter, residual, False)


def cheirank(g: DirectedGraph, alpha: float = DEFAULT_ALPHA, tol: float = DEFAULT_TOL,
             max_iter: int = DEFAULT_MAX_ITER, threads: int = 1) -> RankVector:
    """PageRank of the link-inverted graph."""
    return pagerank(invert(g), alpha=alpha, tol=tol, max_iter=max_iter, threads=threads)


def find_plateaus(rv: RankVector, min_multiplicity: int = 2) -> PlateauReport:
    """Maximal runs of bitwise-equal probability in rank order."""
    p = rv.probabilities[rv.node_at_rank]
    if p.size == 0:
        return PlateauReport([])
    # run boundaries where the value changes bitwise
    change = np.flatnonzero(p[1:] != p[:-1]) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [p.size]))
    plateaus = [
        Plateau(value=float(p[s]), first_rank=int(s + 1), last_rank=int(e),
                multiplicity=int(e - s))
        for s, e in zip(starts, ends) if e - s >= min_multiplicity
    ]
    return PlateauReport(plateaus)


def write_rank_csv(rv: RankVector, path) -> None:
    """CSV export: node_id,probability,rank (atomic write)."""
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write("node_id,probability,rank\n")
        for i in range(rv.node_count):
            fh.write(f"{i},{float(rv.probabilities[i])!r},{int(rv.rank_of_node[i])}\n")
    os.replace(tmp, path)


def write_vector_cache(p: np.ndarray, path) -> None:
    """Binary float64 vector with magic, version and trailing crc32."""
    p = np.ascontiguousarray(p, dtype="<f8")
    payload = _VEC_HEADER.pack(VECTOR_MAGIC, VECTOR_VERSION, p.size) + p.tobytes()
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))
    os.replace(tmp, path)


def read_vector_cache(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _VEC_HEADER.size + 4:
        raise CacheTruncatedError(f"{path}: file shorter than vector header")
    magic, version, n = _VEC_HEADER.unpack_from(blob)
    if magic != VECTOR_MAGIC:
        raise CacheFormatError(f"{path}: not a vector cache (bad magic)")
    if version != VECTOR_VERSION:
        raise CacheVersionError(f"{path}: vector version {version}, expected {VECTOR_VERSION}")
    expected = _VEC_HEADER.size + n * 8 + 4
    if len(blob) < expected:
        raise CacheTruncatedError(f"{path}: expected {expected} bytes, found {len(blob)}")
    (crc,) = struct.unpack_from("<I", blob, expected - 4)
    if zlib.crc32(blob[:expected - 4]) != crc:
        raise CacheChecksumError(f"{path}: checksum mismatch")
    return np.frombuffer(blob, dtype="<f8", count=n, offset=_VEC_HEADER.size).astype(np.float64)
