"""Immutable directed-graph container with CSR adjacency in both orientations.

The graph stores the 0/1 adjacency structure only (duplicate edges collapse,
self-loops are kept). Both link orientations are built at ingestion time so
that the link-inverted view is a free pointer swap.
"""

from __future__ import annotations

import io
import os
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

CACHE_MAGIC = b"SNRK"
CACHE_VERSION = 1

_HEADER = struct.Struct("<4sIQQ")


class EdgeListParseError(ValueError):
    """Malformed edge-list line; carries the 1-based line number."""

    def __init__(self, line_number, message):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class NodeRangeError(ValueError):
    """Node id outside the declared dense range."""


class CacheError(IOError):
    """Base class for binary-cache load failures."""


class CacheFormatError(CacheError):
    """File is not a graph cache (bad magic bytes)."""


class CacheVersionError(CacheError):
    """Cache was written with an unsupported format version."""


class CacheTruncatedError(CacheError):
    """Cache file is shorter than its header promises."""


class CacheChecksumError(CacheError):
    """Cache payload does not match its trailing checksum."""


@dataclass(frozen=True)
class DirectedGraph:
    """Directed graph in compressed sparse row form, both orientations.

    ``out_offsets``/``out_indices`` give, for each node, its sorted successor
    list; ``in_offsets``/``in_indices`` the sorted predecessor list. The two
    encode exactly the same edge set.
    """

    node_count: int
    out_offsets: np.ndarray  # int64, length N+1
    out_indices: np.ndarray  # uint32, length N_ell, sorted per row
    in_offsets: np.ndarray
    in_indices: np.ndarray
    original_ids: np.ndarray | None = field(default=None, compare=False)

    @property
    def edge_count(self) -> int:
        return int(self.out_offsets[-1])

    @property
    def out_degrees(self) -> np.ndarray:
        return np.diff(self.out_offsets)

    @property
    def in_degrees(self) -> np.ndarray:
        return np.diff(self.in_offsets)

    @property
    def dangling_nodes(self) -> np.ndarray:
        """Sorted ids of nodes with zero out-degree."""
        return np.flatnonzero(self.out_degrees == 0)

    def successors(self, node: int) -> np.ndarray:
        return self.out_indices[self.out_offsets[node]:self.out_offsets[node + 1]]

    def predecessors(self, node: int) -> np.ndarray:
        return self.in_indices[self.in_offsets[node]:self.in_offsets[node + 1]]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """All edges as (src, dst) arrays, sorted by (src, dst)."""
        src = np.repeat(np.arange(self.node_count, dtype=np.int64),
                        self.out_degrees)
        return src, self.out_indices.astype(np.int64)

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return (self.node_count == other.node_count
                and np.array_equal(self.out_offsets, other.out_offsets)
                and np.array_equal(self.out_indices, other.out_indices)
                and np.array_equal(self.in_offsets, other.in_offsets)
                and np.array_equal(self.in_indices, other.in_indices))

    def __hash__(self):
        return hash((self.node_count, self.edge_count))


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    links_per_node: float
    dangling_count: int
    in_degree_histogram: np.ndarray
    out_degree_histogram: np.ndarray


def _csr_from_sorted(src, dst, n):
    """CSR arrays from edge arrays already sorted by (src, dst), deduplicated."""
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    return offsets, dst.astype(np.uint32)


def from_edges(src, dst, num_nodes=None, original_ids=None) -> DirectedGraph:
    """Build a DirectedGraph from parallel src/dst arrays.

    Duplicate edges collapse; self-loops are kept. ``num_nodes`` defaults to
    max id + 1 (or the length of ``original_ids`` in remap mode).
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if src.shape != dst.shape:
        raise ValueError("src and dst must have the same length")
    if num_nodes is None:
        top = -1
        if src.size:
            top = max(int(src.max()), int(dst.max()))
        if original_ids is not None:
            top = max(top, len(original_ids) - 1)
        num_nodes = top + 1
    n = int(num_nodes)
    if n < 1:
        raise ValueError("graph must have at least one node")
    if src.size:
        lo = min(int(src.min()), int(dst.min()))
        hi = max(int(src.max()), int(dst.max()))
        if lo < 0 or hi >= n:
            raise NodeRangeError(f"node id {hi if hi >= n else lo} outside [0, {n})")

    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    if src.size:
        keep = np.empty(src.size, dtype=bool)
        keep[0] = True
        np.logical_or(src[1:] != src[:-1], dst[1:] != dst[:-1], out=keep[1:])
        src, dst = src[keep], dst[keep]

    out_offsets, out_indices = _csr_from_sorted(src, dst, n)
    order = np.lexsort((src, dst))
    in_offsets, in_indices = _csr_from_sorted(dst[order], src[order], n)
    ids = None
    if original_ids is not None:
        ids = np.asarray(original_ids, dtype=np.int64)
    return DirectedGraph(n, out_offsets, out_indices, in_offsets, in_indices, ids)


def parse_edge_list(source, id_mode="dense", num_nodes=None) -> DirectedGraph:
    """Parse a "src dst" edge list into a DirectedGraph.

    ``source`` may be a path, an open text stream, or an iterable of lines.
    Lines starting with '#' and blank lines are skipped. In ``remap`` mode
    original ids are assigned dense internal ids in first-appearance order
    and kept on the graph as ``original_ids``; in ``dense`` mode ids are used
    as-is and must be < ``num_nodes`` when that is given.
    """
    if id_mode not in ("dense", "remap"):
        raise ValueError(f"unknown id_mode {id_mode!r}")
    close = False
    if isinstance(source, (str, os.PathLike)):
        source = open(source, "r")
        close = True
    elif isinstance(source, str):
        source = io.StringIO(source)
    try:
        srcs, dsts = [], []
        for lineno, line in enumerate(source, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise EdgeListParseError(lineno, f"expected 2 tokens, got {len(parts)}")
            try:
                s, d = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListParseError(lineno, f"non-integer token in {stripped!r}") from None
            if s < 0 or d < 0:
                raise EdgeListParseError(lineno, "negative node id")
            srcs.append(s)
            dsts.append(d)
    finally:
        if close:
            source.close()

    src = np.asarray(srcs, dtype=np.int64)
    dst = np.asarray(dsts, dtype=np.int64)
    if id_mode == "remap":
        originals, inverse = np.unique(np.concatenate([src, dst]), return_inverse=True)
        # first-appearance order, not sorted order
        flat = np.concatenate([src, dst])
        first_pos = np.full(originals.size, flat.size, dtype=np.int64)
        np.minimum.at(first_pos, inverse, np.arange(flat.size))
        rank = np.argsort(np.argsort(first_pos, kind="stable"), kind="stable")
        remapped = rank[inverse]
        src, dst = remapped[:src.size], remapped[src.size:]
        original_ids = np.empty_like(originals)
        original_ids[rank] = originals
        return from_edges(src, dst, num_nodes=originals.size, original_ids=original_ids)
    return from_edges(src, dst, num_nodes=num_nodes)


def invert(g: DirectedGraph) -> DirectedGraph:
    """Link-inverted view: out- and in-adjacency swap. O(1)."""
    return DirectedGraph(g.node_count, g.in_offsets, g.in_indices,
                         g.out_offsets, g.out_indices, g.original_ids)


def degree_stats(g: DirectedGraph) -> GraphStats:
    out_deg = g.out_degrees
    in_deg = g.in_degrees
    return GraphStats(
        node_count=g.node_count,
        edge_count=g.edge_count,
        links_per_node=g.edge_count / g.node_count,
        dangling_count=int(np.count_nonzero(out_deg == 0)),
        in_degree_histogram=np.bincount(in_deg),
        out_degree_histogram=np.bincount(out_deg),
    )


def _cache_payload(g: DirectedGraph) -> bytes:
    head = _HEADER.pack(CACHE_MAGIC, CACHE_VERSION, g.node_count, g.edge_count)
    parts = [
        head,
        np.ascontiguousarray(g.out_offsets, dtype="<i8").tobytes(),
        np.ascontiguousarray(g.out_indices, dtype="<u4").tobytes(),
        np.ascontiguousarray(g.in_offsets, dtype="<i8").tobytes(),
        np.ascontiguousarray(g.in_indices, dtype="<u4").tobytes(),
    ]
    return b"".join(parts)


def save_cache(g: DirectedGraph, path) -> None:
    """Write the binary cache: magic, version, N, N_ell, CSR arrays, crc32."""
    payload = _cache_payload(g)
    crc = zlib.crc32(payload)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.write(struct.pack("<I", crc))
    os.replace(tmp, path)


def load_cache(path) -> DirectedGraph:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size + 4:
        raise CacheTruncatedError(f"{path}: file shorter than cache header")
    magic, version, n, n_ell = _HEADER.unpack_from(blob)
    if magic != CACHE_MAGIC:
        raise CacheFormatError(f"{path}: not a graph cache (bad magic)")
    if version != CACHE_VERSION:
        raise CacheVersionError(f"{path}: cache version {version}, expected {CACHE_VERSION}")
    expected = _HEADER.size + 2 * ((n + 1) * 8 + n_ell * 4) + 4
    if len(blob) < expected:
        raise CacheTruncatedError(f"{path}: expected {expected} bytes, found {len(blob)}")
    (crc,) = struct.unpack_from("<I", blob, expected - 4)
    if zlib.crc32(blob[:expected - 4]) != crc:
        raise CacheChecksumError(f"{path}: checksum mismatch")
    pos = _HEADER.size
    out_offsets = np.frombuffer(blob, dtype="<i8", count=n + 1, offset=pos).astype(np.int64)
    pos += (n + 1) * 8
    out_indices = np.frombuffer(blob, dtype="<u4", count=n_ell, offset=pos).astype(np.uint32)
    pos += n_ell * 4
    in_offsets = np.frombuffer(blob, dtype="<i8", count=n + 1, offset=pos).astype(np.int64)
    pos += (n + 1) * 8
    in_indices = np.frombuffer(blob, dtype="<u4", count=n_ell, offset=pos).astype(np.uint32)
    return DirectedGraph(int(n), out_offsets, out_indices, in_offsets, in_indices)
