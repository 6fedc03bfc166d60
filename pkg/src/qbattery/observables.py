"""Work-extraction figures of merit: energy, ergotropy, coherence, ratio.

Ergotropy is the maximum work extractable from a state by a unitary:
Tr[H rho] minus the passive energy, where the passive energy pairs the
state's populations sorted ascending with the Hamiltonian's levels sorted
descending (largest population on the lowest level).  The l1-coherence is
the sum of absolute off-diagonal entries of the state expressed in a
deterministic eigenbasis of the battery Hamiltonian.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.stats

from .operators import expectation

STORED_ENERGY_FLOOR = 1e-9
DEGENERACY_GAP = 1e-10
BRUTEFORCE_EXHAUSTIVE_DIM = 8
BRUTEFORCE_MAX_DIM = 16


@dataclass(frozen=True)
class ErgotropyReport:
    """Energy bookkeeping for one state.

    w, passive_energy, and ergotropy are always set; stored, ratio, and
    coherence are filled by the scenario layer, which knows the initial
    energy and the reference basis (ratio is None where the stored energy
    is below the reporting floor).
    """

    w: float
    passive_energy: float
    ergotropy: float
    stored: float | None = None
    ratio: float | None = None
    coherence: float | None = None


def ergotropy(
    rho: np.ndarray,
    h_b: np.ndarray,
    h_energies: np.ndarray | None = None,
) -> ErgotropyReport:
    """Spectral-formula ergotropy of state rho under Hamiltonian h_b.

    passive_energy = sum_i lambda_i eps_i with populations lambda sorted
    ascending and energies eps sorted descending; ergotropy is their gap
    to Tr[h_b rho] and is nonnegative up to eigensolver round-off.

    h_energies optionally carries the precomputed ascending spectrum of
    h_b, so time-series loops diagonalize the (fixed) Hamiltonian once.
    """
    rho = np.asarray(rho, dtype=complex)
    h_b = np.asarray(h_b, dtype=complex)
    if rho.shape != h_b.shape:
        raise ValueError(
            f"dimension mismatch: state {rho.shape} vs Hamiltonian {h_b.shape}"
        )
    w = expectation(rho, h_b)
    populations = np.linalg.eigvalsh(rho)          # ascending
    if h_energies is None:
        h_energies = np.linalg.eigvalsh(h_b)
    energies = np.asarray(h_energies)[::-1]        # descending
    passive = float(np.real(np.dot(populations, energies)))
    return ErgotropyReport(w=w, passive_energy=passive, ergotropy=w - passive)


def ergotropy_bruteforce_oracle(
    rho: np.ndarray,
    h_b: np.ndarray,
    n_random_unitaries: int,
    seed: int = 0,
) -> float:
    """Ergotropy via direct minimization, independent of the sorting shortcut.

    Minimizes the post-extraction energy over (a) assignments of state
    eigenvectors to Hamiltonian eigenvectors -- exhaustively for dim <= 8,
    via an optimal-assignment solver for 8 < dim <= 16 -- and (b)
    n_random_unitaries Haar-random unitaries, then returns
    Tr[h_b rho] - min.  Test-scale only.
    """
    rho = np.asarray(rho, dtype=complex)
    h_b = np.asarray(h_b, dtype=complex)
    dim = rho.shape[0]
    if dim > BRUTEFORCE_MAX_DIM:
        raise ValueError(
            f"brute-force oracle supports dim <= {BRUTEFORCE_MAX_DIM}, got {dim}"
        )
    w = expectation(rho, h_b)
    populations = np.linalg.eigvalsh(rho)
    energies = np.linalg.eigvalsh(h_b)
    best = np.inf
    if dim <= BRUTEFORCE_EXHAUSTIVE_DIM:
        for perm in itertools.permutations(range(dim)):
            value = float(np.dot(populations, energies[list(perm)]))
            if value < best:
                best = value
    else:
        cost = np.outer(populations, energies)
        rows, cols = scipy.optimize.linear_sum_assignment(cost)
        best = float(cost[rows, cols].sum())
    if n_random_unitaries > 0:
        unitaries = scipy.stats.unitary_group.rvs(
            dim, size=n_random_unitaries, random_state=seed
        )
        if n_random_unitaries == 1:
            unitaries = unitaries[np.newaxis, :, :]
        rotated = unitaries @ rho @ unitaries.conj().transpose(0, 2, 1)
        extracted = np.einsum("kij,ji->k", rotated, h_b)
        if np.max(np.abs(extracted.imag)) > 1e-9:
            raise ValueError("unitary extraction produced a non-real energy")
        best = min(best, float(np.min(extracted.real)))
    return w - best


def energy_eigenbasis(
    h_b: np.ndarray, degeneracy_probe: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic eigenbasis of a Hermitian matrix.

    Eigenvectors are sorted by ascending eigenvalue.  Within each cluster of
    (numerically) degenerate eigenvalues, the basis is fixed by:

    1. diagonalizing the restriction of `degeneracy_probe` to the cluster
       and sorting by its eigenvalue, when that restriction actually splits
       the cluster (spread above 1e-10); then
    2. for any residual degeneracy, a modified Gram-Schmidt canonicalization
       of the cluster projector against the standard basis, which depends
       only on the spanned subspace, not on eigensolver output.

    Returns (eigenvalues ascending, basis matrix with eigenvectors as columns).
    """
    h_b = np.asarray(h_b, dtype=complex)
    vals, vecs = np.linalg.eigh(h_b)
    clusters = _degenerate_clusters(vals)
    for start, stop in clusters:
        if stop - start == 1:
            continue
        block = vecs[:, start:stop]
        if degeneracy_probe is not None:
            restricted = block.conj().T @ degeneracy_probe @ block
            restricted = 0.5 * (restricted + restricted.conj().T)
            sub_vals, sub_vecs = np.linalg.eigh(restricted)
            if sub_vals[-1] - sub_vals[0] > DEGENERACY_GAP:
                block = block @ sub_vecs
                # canonicalize probe-degenerate sub-clusters as well
                for s2, e2 in _degenerate_clusters(sub_vals):
                    if e2 - s2 > 1:
                        block[:, s2:e2] = _canonical_subspace_basis(
                            block[:, s2:e2]
                        )
                vecs[:, start:stop] = block
                continue
        vecs[:, start:stop] = _canonical_subspace_basis(block)
    return vals, vecs


def _degenerate_clusters(vals: np.ndarray) -> list[tuple[int, int]]:
    """Split a sorted eigenvalue array into [start, stop) degeneracy runs."""
    clusters = []
    start = 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[i - 1] > DEGENERACY_GAP:
            clusters.append((start, i))
            start = i
    return clusters


def _canonical_subspace_basis(block: np.ndarray) -> np.ndarray:
    """Basis of span(block) depending only on the subspace itself.

    Projects the standard basis vectors onto the subspace in index order and
    orthonormalizes the projections with modified Gram-Schmidt, skipping
    near-null directions.  The result is invariant under any unitary mixing
    of the input columns.
    """
    dim, k = block.shape
    projector = block @ block.conj().T
    basis = []
    for j in range(dim):
        v = projector[:, j].copy()
        for u in basis:
            v -= u * (u.conj() @ v)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
        if len(basis) == k:
            break
    if len(basis) != k:
        raise RuntimeError("subspace canonicalization failed to span the block")
    return np.column_stack(basis)


def coherence_l1_energy_basis(
    rho: np.ndarray,
    h_b: np.ndarray,
    basis: np.ndarray | None = None,
    degeneracy_probe: np.ndarray | None = None,
) -> float:
    """Sum of |off-diagonal| entries of rho in the h_b eigenbasis.

    When `basis` is given (unitary, eigenvectors as columns) it is used
    directly; this is how scenarios pin the analytic product eigenbasis of
    the noninteracting battery, whose spectrum is massively degenerate.
    Otherwise the deterministic basis from energy_eigenbasis is built, with
    `degeneracy_probe` as the tie-breaking observable.
    """
    rho = np.asarray(rho, dtype=complex)
    h_b = np.asarray(h_b, dtype=complex)
    if rho.shape != h_b.shape:
        raise ValueError(
            f"dimension mismatch: state {rho.shape} vs Hamiltonian {h_b.shape}"
        )
    if basis is None:
        _, basis = energy_eigenbasis(h_b, degeneracy_probe)
    transformed = basis.conj().T @ rho @ basis
    off = np.abs(transformed)
    np.fill_diagonal(off, 0.0)
    return float(off.sum())


def extraction_ratio(ergotropy_value: float, stored: float) -> float | None:
    """Extractable fraction ergotropy / stored, or None below the floor.

    None (a distinguished missing value, not zero) is returned when
    |stored| <= 1e-9, e.g. at t = 0 where no energy has been stored yet.
    """
    if abs(stored) <= STORED_ENERGY_FLOOR:
        return None
    return ergotropy_value / stored
