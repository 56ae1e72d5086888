"""Arnoldi iteration on the projected core block of S.

The core-block matvec embeds a core-supported vector into the full network,
applies S, and truncates back to the core: contributions leaking into the
invariant subspaces are exactly the discarded coupling block, so this is the
projected core operator. Modified Gram-Schmidt with one unconditional full
reorthogonalization pass keeps the basis orthonormal to ~1e-14.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .graph import DirectedGraph
from .operator import GoogleOperator
from .subspaces import SubspaceDecomposition, SubspaceSpectrum

BREAKDOWN_TOL = 1e-14
CONVERGED_RESIDUAL = 1e-6


@dataclass(frozen=True)
class ArnoldiResult:
    """Ritz values of the core block, sorted by descending modulus."""

    ritz_values: np.ndarray  # complex
    residual_norms: np.ndarray  # aligned with ritz_values
    krylov_dimension: int  # dimension actually used
    hessenberg: np.ndarray  # (k+1) x k
    core_nodes: np.ndarray
    breakdown: bool
    ortho_defect: float | None
    relation_residual: float | None
    ritz_vectors: dict[int, np.ndarray] | None  # index in ritz order -> core vector

    @property
    def converged_mask(self) -> np.ndarray:
        return self.residual_norms < CONVERGED_RESIDUAL


@dataclass(frozen=True)
class EigvecProfile:
    """Moduli of an eigenvector sorted decreasing, with its own rank index."""

    moduli: np.ndarray  # descending, sums to 1
    node_at_rank: np.ndarray

    @property
    def ranks(self) -> np.ndarray:
        return np.arange(1, self.moduli.size + 1)


def _dot(a, b):
    # plain elementwise-product reduction: deterministic, no BLAS threading
    return np.sum(np.conj(a) * b) if np.iscomplexobj(a) else np.sum(a * b)


def _norm(a):
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def _restart_vector(basis, k, rng):
    """Deterministic replacement vector orthogonal to the current basis."""
    n = basis.shape[1]
    for _ in range(10):
        v = rng.standard_normal(n)
        for j in range(k + 1):
            v -= _dot(basis[j], v) * basis[j]
        for j in range(k + 1):
            v -= _dot(basis[j], v) * basis[j]
        norm = _norm(v)
        if norm > BREAKDOWN_TOL:
            return v / norm
    raise RuntimeError("could not find a vector outside the Krylov space")


def arnoldi_core(g: DirectedGraph, decomp: SubspaceDecomposition, n_arnoldi: int,
                 start=None, vector_indices=None, on_breakdown: str = "stop",
                 check: bool = True, threads: int = 1) -> ArnoldiResult:
    """Arnoldi iteration of the projected core block.

    ``start`` is uniform on the core by default. On happy breakdown,
    ``on_breakdown="stop"`` returns the exact invariant-subspace result of
    the dimension reached (flagged); ``"restart"`` continues with a fresh
    deterministic vector orthogonal to the basis, which with
    ``n_arnoldi == core size`` yields the complete core spectrum.
    Ritz vectors are materialized only for ``vector_indices`` (indices into
    the modulus-sorted Ritz order).
    """
    if on_breakdown not in ("stop", "restart"):
        raise ValueError(f"unknown on_breakdown {on_breakdown!r}")
    core = decomp.core_nodes
    n_core = core.size
    if n_core == 0:
        raise ValueError("core space is empty")
    if not 1 <= n_arnoldi <= n_core:
        raise ValueError(f"n_arnoldi must be in [1, {n_core}], got {n_arnoldi}")

    op = GoogleOperator(g, alpha=1.0, threads=threads)
    n_full = g.node_count
    embed = np.zeros(n_full)

    def matvec(v_core):
        embed[:] = 0.0
        embed[core] = v_core
        return op.apply_s(embed)[core]

    if start is None:
        v0 = np.full(n_core, 1.0 / np.sqrt(n_core))
    else:
        v0 = np.asarray(start, dtype=np.float64)
        if v0.shape != (n_core,):
            raise ValueError("start vector must have core-space length")
        norm = _norm(v0)
        if norm == 0.0:
            raise ValueError("start vector is zero")
        v0 = v0 / norm

    basis = np.zeros((n_arnoldi + 1, n_core))
    basis[0] = v0
    hess = np.zeros((n_arnoldi + 1, n_arnoldi))
    rng = np.random.default_rng(0x5eed)
    breakdown = False
    k_used = n_arnoldi

    for k in range(n_arnoldi):
        w = matvec(basis[k])
        for j in range(k + 1):
            h = _dot(basis[j], w)
            w -= h * basis[j]
            hess[j, k] += h
        # one unconditional full reorthogonalization pass
        for j in range(k + 1):
            c = _dot(basis[j], w)
            w -= c * basis[j]
            hess[j, k] += c
        norm = _norm(w)
        if norm < BREAKDOWN_TOL:
            hess[k + 1, k] = 0.0
            if k + 1 == n_arnoldi:
                k_used = n_arnoldi
                break
            if on_breakdown == "stop":
                breakdown = True
                k_used = k + 1
                basis = basis[:k_used + 1]
                hess = hess[:k_used + 1, :k_used]
                break
            basis[k + 1] = _restart_vector(basis, k, rng)
        else:
            hess[k + 1, k] = norm
            basis[k + 1] = w / norm

    square = hess[:k_used, :k_used]
    values, vecs = np.linalg.eig(square)
    h_last = abs(hess[k_used, k_used - 1]) if hess.shape[0] > k_used else 0.0
    residuals = h_last * np.abs(vecs[-1, :])

    order = np.argsort(-np.abs(values), kind="stable")
    values = values[order]
    residuals = residuals[order]
    vecs = vecs[:, order]

    ritz_vectors = None
    if vector_indices is not None:
        ritz_vectors = {}
        for idx in vector_indices:
            vec = basis[:k_used].T.astype(np.complex128) @ vecs[:, idx]
            ritz_vectors[int(idx)] = vec

    ortho_defect = relation_residual = None
    if check:
        # the final basis row is zero after a terminal happy breakdown
        rows = k_used + 1 if hess[k_used, k_used - 1] != 0.0 else k_used
        gram = basis[:rows] @ basis[:rows].T
        ortho_defect = float(np.max(np.abs(gram - np.eye(rows))))
        defect = 0.0
        for k in range(k_used):
            av = matvec(basis[k])
            av -= basis[:k_used + 1].T @ hess[:k_used + 1, k]
            defect = max(defect, float(np.max(np.abs(av))))
        relation_residual = defect

    return ArnoldiResult(values, residuals, k_used, hess, core,
                         breakdown, ortho_defect, relation_residual, ritz_vectors)


@dataclass(frozen=True)
class IntegratedSpectrum:
    """Step curves of the eigenvalue fraction j/N versus |lambda_j|."""

    combined_moduli: np.ndarray  # descending
    combined_fraction: np.ndarray  # j/N
    core_moduli: np.ndarray
    core_fraction: np.ndarray


def integrated_spectrum(subspace_spec: SubspaceSpectrum, core: ArnoldiResult | None,
                        node_count: int) -> IntegratedSpectrum:
    """Fraction of eigenvalues j/N exceeding each modulus, for the combined
    subspace+core set and the core-only set."""
    core_vals = core.ritz_values if core is not None else np.empty(0, dtype=complex)
    core_mod = np.sort(np.abs(core_vals))[::-1]
    combined_mod = np.sort(np.concatenate(
        [np.abs(subspace_spec.all_eigenvalues), np.abs(core_vals)]))[::-1]
    return IntegratedSpectrum(
        combined_moduli=combined_mod,
        combined_fraction=np.arange(1, combined_mod.size + 1) / node_count,
        core_moduli=core_mod,
        core_fraction=np.arange(1, core_mod.size + 1) / node_count,
    )


def eigvec_profile(vector: np.ndarray) -> EigvecProfile:
    """Moduli normalized to unit sum, sorted descending with ties broken by
    ascending node id."""
    vector = np.asarray(vector)
    moduli = np.abs(vector).astype(np.float64)
    total = moduli.sum()
    if total == 0.0:
        raise ValueError("zero vector has no profile")
    moduli /= total
    node_at_rank = np.argsort(-moduli, kind="stable").astype(np.int64)
    return EigvecProfile(moduli[node_at_rank], node_at_rank)


def write_spectrum_csv(path, subspace_spec: SubspaceSpectrum | None,
                       core: ArnoldiResult | None) -> None:
    """CSV export: re,im,modulus,residual,origin. Subspace eigenvalues come
    from dense solves and carry residual 0."""
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write("re,im,modulus,residual,origin\n")
        if subspace_spec is not None:
            for lam in subspace_spec.all_eigenvalues:
                fh.write(f"{float(lam.real)!r},{float(lam.imag)!r},"
                         f"{float(abs(lam))!r},0.0,subspace\n")
        if core is not None:
            for lam, res in zip(core.ritz_values, core.residual_norms):
                fh.write(f"{float(lam.real)!r},{float(lam.imag)!r},"
                         f"{float(abs(lam))!r},{float(res)!r},core\n")
    os.replace(tmp, path)
