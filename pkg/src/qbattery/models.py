"""Battery Hamiltonian, reservoir-induced effective Hamiltonians, initial states.

The battery register is a ring of N spin-1/2 cells with

    H_B = sum_i (h/2) sigma_i^x + (j_coupling/4) sum_<ij> sigma_i^z sigma_j^z

where <ij> runs over distinct adjacent pairs (with wraparound when
periodic).  The reservoir-induced effective Hamiltonians are either an
Ising zz coupling (dephasing reservoirs) or an XX + Dzyaloshinskii-Moriya
exchange (amplitude-damping reservoirs), on nearest-neighbor bonds or on
all pairs.

Bond-set convention, used consistently by every builder here (battery zz
term, effective Hamiltonians, and the rate-matrix adjacency): the periodic
ring sums the literal oriented adjacency j -> j+1 for j = 0..N-1 including
the wraparound, so N = 2 periodic carries both orientations of its single
pair and the pair coupling doubles (and the antisymmetric DM part cancels).
An open chain (periodic = False) drops the wraparound; the open two-cell
system is the single bond 0 -> 1 with the full complex coupling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import embed, kron_all, pauli

GROUND_DEGENERACY_GAP = 1e-10


class DegenerateGroundStateError(ValueError):
    """Lowest eigenvalue is (numerically) degenerate; refuse to pick a vector."""


@dataclass(frozen=True)
class BatteryModel:
    """Parameters of the battery Hamiltonian.

    Attributes:
        n_sites: number of cells, N >= 1.
        h: transverse field strength (enters as h/2 per cell).
        j_coupling: zz coupling strength (enters as j_coupling/4 per bond).
        periodic: close the ring (adjacent-pair set wraps around).
    """

    n_sites: int
    h: float
    j_coupling: float = 0.0
    periodic: bool = True

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be >= 1, got {self.n_sites}")


@dataclass(frozen=True)
class EffectiveCoupling:
    """Reservoir-induced coherent coupling between cells.

    kind = "ising_z": H_eff = j_z * sum_bonds sigma_j^z sigma_k^z
    kind = "xx_dm":   H_eff = sum_bonds [J sigma_j^+ sigma_k^- + h.c.] with
                      complex J = j_xx + i*d_dm, equivalently
                      (j_xx/2)(XX + YY) + (d_dm/2)(XY - YX) per bond.

    interaction_range selects the bond set: "nearest_neighbor" (ring bonds)
    or "all_to_all" (every pair j < k, oriented j -> k).
    """

    kind: str
    j_z: float = 0.0
    j_xx: float = 0.0
    d_dm: float = 0.0
    interaction_range: str = "nearest_neighbor"

    def __post_init__(self) -> None:
        if self.kind not in ("ising_z", "xx_dm"):
            raise ValueError(f"unknown coupling kind {self.kind!r}")
        if self.interaction_range not in ("nearest_neighbor", "all_to_all"):
            raise ValueError(
                f"unknown interaction range {self.interaction_range!r}"
            )
        if self.kind == "ising_z" and (self.j_xx != 0.0 or self.d_dm != 0.0):
            raise ValueError("ising_z coupling must leave j_xx and d_dm at 0")
        if self.kind == "xx_dm" and self.j_z != 0.0:
            raise ValueError("xx_dm coupling must leave j_z at 0")


def ring_bonds(n_sites: int, periodic: bool = True) -> list[tuple[int, int]]:
    """Oriented adjacency list of the chain: bond j -> (j+1) mod N.

    The periodic ring is the literal wrapped sum, one bond per site, so
    N = 2 periodic yields both orientations of its single pair,
    [(0, 1), (1, 0)], and pair couplings double.  An open chain drops the
    wraparound: N - 1 bonds, and N = 2 open is the single bond [(0, 1)].
    """
    if n_sites < 2:
        return []
    if periodic:
        return [(j, (j + 1) % n_sites) for j in range(n_sites)]
    return [(j, j + 1) for j in range(n_sites - 1)]


def all_pair_bonds(n_sites: int) -> list[tuple[int, int]]:
    """All pairs j < k, oriented j -> k."""
    return [(j, k) for j in range(n_sites) for k in range(j + 1, n_sites)]


def battery_hamiltonian(model: BatteryModel) -> np.ndarray:
    """Dense battery Hamiltonian for the given model.

    With j_coupling = 0 the spectrum is {-N h/2, ..., +N h/2} in steps of h
    and the ground state is the product of single-cell field ground states.
    """
    n = model.n_sites
    dim = 2**n
    h_mat = np.zeros((dim, dim), dtype=complex)
    sx = pauli("x")
    for i in range(n):
        h_mat += (model.h / 2.0) * embed(sx, i, n)
    if model.j_coupling != 0.0:
        sz = pauli("z")
        for j, k in ring_bonds(n, model.periodic):
            h_mat += (model.j_coupling / 4.0) * (embed(sz, j, n) @ embed(sz, k, n))
    return h_mat


def effective_hamiltonian(
    coupling: EffectiveCoupling, n_sites: int, periodic: bool = True
) -> np.ndarray:
    """Reservoir-induced coherent Hamiltonian acting on the battery cells.

    Always Hermitian.  Returns the zero matrix when all strengths vanish
    (in particular for purely local reservoirs).
    """
    if coupling.interaction_range == "nearest_neighbor":
        bonds = ring_bonds(n_sites, periodic)
    else:
        bonds = all_pair_bonds(n_sites)
    dim = 2**n_sites
    h_eff = np.zeros((dim, dim), dtype=complex)
    if coupling.kind == "ising_z":
        if coupling.j_z == 0.0:
            return h_eff
        sz = pauli("z")
        for j, k in bonds:
            h_eff += coupling.j_z * (embed(sz, j, n_sites) @ embed(sz, k, n_sites))
        return h_eff
    # xx_dm: J sigma_j^+ sigma_k^- + conj(J) sigma_j^- sigma_k^+ per bond,
    # J = j_xx + i d_dm.
    if coupling.j_xx == 0.0 and coupling.d_dm == 0.0:
        return h_eff
    j_complex = coupling.j_xx + 1j * coupling.d_dm
    sp = pauli("plus")
    sm = pauli("minus")
    for j, k in bonds:
        hop = embed(sp, j, n_sites) @ embed(sm, k, n_sites)
        h_eff += j_complex * hop + np.conj(j_complex) * hop.conj().T
    return h_eff


def ground_state(h_matrix: np.ndarray) -> np.ndarray:
    """Pure-state density matrix of the unique lowest eigenvector.

    Raises DegenerateGroundStateError when the gap above the lowest
    eigenvalue is smaller than 1e-10; a degenerate ground level has no
    canonical representative, so the caller must construct the state
    explicitly (see product_minus_state for the j_coupling = 0 battery).
    """
    h_matrix = np.asarray(h_matrix, dtype=complex)
    if np.max(np.abs(h_matrix - h_matrix.conj().T)) > 1e-12:
        raise ValueError("ground_state expects a Hermitian matrix")
    vals, vecs = np.linalg.eigh(h_matrix)
    if len(vals) > 1 and vals[1] - vals[0] < GROUND_DEGENERACY_GAP:
        raise DegenerateGroundStateError(
            f"ground level is degenerate (gap {vals[1] - vals[0]:.3e}); "
            "specify the initial state explicitly"
        )
    g = vecs[:, 0]
    return np.outer(g, g.conj())


def product_minus_state(n_sites: int) -> np.ndarray:
    """Density matrix of the product state |-><-| on every cell.

    |-> = (|up> - |down>)/sqrt(2) is the single-cell ground state of the
    field term (h/2) sigma^x for h > 0.  This constructor bypasses
    diagonalization so the j_coupling = 0 battery (whose full spectrum is
    degenerate in every excited level) has a canonical preparation.
    """
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    minus = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
    vec = kron_all([minus] * n_sites) if n_sites > 1 else minus
    return np.outer(vec, vec.conj())


def field_product_eigenbasis(
    n_sites: int, h: float
) -> tuple[np.ndarray, np.ndarray]:
    """Canonical eigenbasis of the noninteracting battery (j_coupling = 0).

    The field-only Hamiltonian sum_i (h/2) sigma_i^x is diagonal in the
    product basis of single-cell sigma^x eigenstates |+> = (1, 1)/sqrt(2)
    and |-> = (1, -1)/sqrt(2), but every excited level is massively
    degenerate, so a numerical eigensolver returns arbitrary mixtures.
    This builder fixes the basis analytically: column a is the product
    state whose i-th factor is |-> when bit i of a is set (site 0 = most
    significant bit, mirroring the z-basis indexing), with energy
    (h/2) (n_plus - n_minus).  Columns are sorted by ascending energy,
    ties broken by ascending bit pattern.

    Returns:
        (energies, basis) with energies ascending and basis columns the
        matching eigenvectors.
    """
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
    minus = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
    dim = 2**n_sites
    basis = np.empty((dim, dim), dtype=complex)
    energies = np.empty(dim, dtype=float)
    for a in range(dim):
        factors = [
            minus if (a >> (n_sites - 1 - i)) & 1 else plus
            for i in range(n_sites)
        ]
        basis[:, a] = kron_all(factors) if n_sites > 1 else factors[0]
        n_minus = bin(a).count("1")
        energies[a] = (h / 2.0) * (n_sites - 2 * n_minus)
    order = np.lexsort((np.arange(dim), energies))
    return energies[order], basis[:, order]
