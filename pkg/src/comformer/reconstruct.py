"""Rebuild crystals from graphs alone and score agreement with the original.

The invariant path recovers the periodic basis from node 0's designated
self-edges (lengths plus pairwise angles, orientation fixed right-handed),
places every atom by solving the 3x3 linear system its edge angles define,
and walks the graph breadth-first from node 0. The equivariant path
accumulates edge vectors directly. Multi-path placements are required to
agree: completeness implies the over-determined system is consistent, so a
disagreement signals a corrupted or non-realizable graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DisconnectedError,
    InconsistentPlacementError,
    KindMismatchError,
    LeftHandedSolutionError,
    SingularBasisError,
    SpeciesMismatchError,
)
from .geometry import Crystal, Lattice, rotation_between
from .graph import EQUIVARIANT, INVARIANT, CrystalGraph, Edge
from .latticerepr import build_lattice_representation

#: multi-path placements must agree to this distance (A)
CONSISTENCY_TOL = 1e-8


def rebuild_lattice_from_graph(graph: CrystalGraph) -> np.ndarray:
    """Recover the periodic basis (rows e1, e2, e3) in the canonical frame.

    Canonical frame: e1 along +x, e2 in the xy half-plane with positive y,
    e3 fixed by right-handedness. Node 0's self-edge for basis vector m
    carries the vector ``-e_m``, so recorded angles are the supplements of
    the basis angles.
    """
    if graph.kind != INVARIANT:
        raise KindMismatchError("basis rebuild from angles needs an invariant graph")
    idx = graph.designated_edge_indices(0)
    lengths = graph.dists[idx]
    # cos of the angle between basis vectors m and k
    cos = -np.cos(graph.angles[idx])

    l1, l2, l3 = lengths
    c12 = float(np.clip(cos[1, 0], -1.0, 1.0))
    s12 = np.sqrt(max(1.0 - c12 * c12, 0.0))
    if s12 <= 1e-8:
        raise SingularBasisError("first two basis vectors are collinear")
    c13 = float(np.clip(cos[2, 0], -1.0, 1.0))
    c23 = float(np.clip(cos[2, 1], -1.0, 1.0))

    e1 = np.array([l1, 0.0, 0.0])
    e2 = np.array([l2 * c12, l2 * s12, 0.0])
    x3 = l3 * c13
    y3 = (l3 * c23 - x3 * c12) / s12
    z3sq = l3 * l3 - x3 * x3 - y3 * y3
    if z3sq <= (1e-8 * l3) ** 2:
        raise LeftHandedSolutionError(
            "recorded self-edge angles admit no right-handed basis; graph is corrupt"
        )
    e3 = np.array([x3, y3, np.sqrt(z3sq)])
    basis = np.array([e1, e2, e3])

    # the recorded angle table is over-determined; verify all nine entries
    norm = basis / lengths[:, None]
    recorded = np.arccos(np.clip(-cos, -1.0, 1.0))
    rebuilt = np.arccos(np.clip(-(norm @ norm.T), -1.0, 1.0))
    if np.max(np.abs(recorded - rebuilt)) > 1e-7:
        raise InconsistentPlacementError(
            "self-edge angle table is internally inconsistent"
        )
    return basis


def place_neighbor(edge: Edge, basis: np.ndarray) -> np.ndarray:
    """Position of a neighbor duplicate relative to its center node.

    Solves ``p . e_m = dist * |e_m| * cos(theta_m)`` for the three basis
    vectors; unique because the basis is non-coplanar.
    """
    if edge.angles is None:
        raise KindMismatchError("placement from angles needs an invariant edge")
    basis = np.asarray(basis, dtype=float)
    if abs(np.linalg.det(basis)) <= 1e-12:
        raise SingularBasisError("reconstruction basis is numerically coplanar")
    lengths = np.linalg.norm(basis, axis=1)
    rhs = edge.dist * lengths * np.cos(edge.angles)
    return np.linalg.solve(basis, rhs)


def _solve_all(graph: CrystalGraph, basis: np.ndarray) -> np.ndarray:
    lengths = np.linalg.norm(basis, axis=1)
    rhs = graph.dists[:, None] * lengths[None, :] * np.cos(graph.angles)
    return rhs @ np.linalg.inv(basis).T


def _bfs_place(graph: CrystalGraph, basis: np.ndarray, rel: np.ndarray) -> np.ndarray:
    """Place every node from node 0 using per-edge relative vectors ``rel``.

    Positions are defined modulo the basis, so edges can be walked in either
    direction; each placement is reduced into the cell.
    """
    n = graph.n_nodes
    inv = np.linalg.inv(basis)

    norm_err = np.abs(np.linalg.norm(rel, axis=1) - graph.dists)
    if np.max(norm_err) > CONSISTENCY_TOL * max(1.0, float(np.max(graph.dists))):
        raise InconsistentPlacementError(
            "edge features are not realizable: placed distance differs from "
            f"recorded distance by {np.max(norm_err):.3e} A"
        )

    incident = [[] for _ in range(n)]
    for e in range(graph.n_edges):
        s, d = int(graph.src[e]), int(graph.dst[e])
        if s != d:
            incident[s].append(e)
            incident[d].append(e)

    def wrap(p):
        f = p @ inv
        f -= np.floor(f)
        f[f >= 1.0] -= 1.0
        return f @ basis

    positions = np.zeros((n, 3))
    placed = np.zeros(n, dtype=bool)
    placed[0] = True
    frontier = [0]
    while frontier:
        nxt = set()
        for node in sorted(frontier):
            for e in incident[node]:
                s, d = int(graph.src[e]), int(graph.dst[e])
                other = d if s == node else s
                if placed[other]:
                    continue
                # rel[e] = p[dst] - p[src] modulo the lattice
                if node == s:
                    positions[other] = wrap(positions[node] + rel[e])
                else:
                    positions[other] = wrap(positions[node] - rel[e])
                placed[other] = True
                nxt.add(other)
        frontier = nxt
    if not np.all(placed):
        raise DisconnectedError(
            f"{int(np.count_nonzero(~placed))} of {n} nodes unreachable from node 0; "
            "increase k when building the graph"
        )

    # every edge (tree or not) must agree with the placement modulo the cell
    delta = positions[graph.dst] - positions[graph.src] - rel
    frac = delta @ inv
    frac -= np.rint(frac)
    err = np.linalg.norm(frac @ basis, axis=1)
    if np.max(err) > CONSISTENCY_TOL:
        raise InconsistentPlacementError(
            f"redundant edges disagree about atom positions by {np.max(err):.3e} A; "
            "the graph does not describe a realizable crystal"
        )
    return positions


def reconstruct_crystal(graph: CrystalGraph) -> Crystal:
    """Rebuild the crystal from an invariant graph, node 0 at the origin."""
    if graph.kind != INVARIANT:
        raise KindMismatchError("invariant reconstruction needs an invariant graph")
    basis = rebuild_lattice_from_graph(graph)
    rel = _solve_all(graph, basis)
    positions = _bfs_place(graph, basis, rel)
    return Crystal(lattice=Lattice(basis), positions=positions, species=graph.atomic_numbers)


def reconstruct_crystal_equivariant(graph: CrystalGraph) -> Crystal:
    """Rebuild the crystal from an equivariant graph (original orientation)."""
    if graph.kind != EQUIVARIANT:
        raise KindMismatchError("equivariant reconstruction needs an equivariant graph")
    idx = graph.designated_edge_indices(0)
    basis = -graph.vecs[idx]
    if np.linalg.det(basis) <= 0:
        raise LeftHandedSolutionError(
            "self-edge vectors form a left-handed basis; graph is corrupt"
        )
    positions = _bfs_place(graph, basis, graph.vecs)
    return Crystal(lattice=Lattice(basis), positions=positions, species=graph.atomic_numbers)


@dataclass(frozen=True)
class ReconstructionReport:
    rmsd: float
    max_pointwise: float
    lattice_mismatch: float
    success: bool

    def to_dict(self) -> dict:
        return {
            "rmsd": self.rmsd,
            "max_pointwise": self.max_pointwise,
            "lattice_mismatch": self.lattice_mismatch,
            "success": self.success,
        }


def match_structures(
    original: Crystal, reconstructed: Crystal, tol: float = 1e-6
) -> ReconstructionReport:
    """Score how well ``reconstructed`` reproduces ``original``.

    Correspondence is by index (reconstruction preserves node order). Both
    structures are expressed relative to their own atom 0; the reconstructed
    basis is aligned by a proper rotation onto the original's lattice
    representation (or onto the original's own rows, whichever fits the atoms
    better), and per-atom deltas are wrapped to the nearest periodic image.
    Reflections are never used, so chirality mismatches stay visible.
    """
    if original.n_atoms != reconstructed.n_atoms or not np.array_equal(
        original.species, reconstructed.species
    ):
        raise SpeciesMismatchError("structures differ in size or species order")

    q_orig = original.positions - original.positions[0]
    q_rec = reconstructed.positions - reconstructed.positions[0]
    inv = original.lattice.inverse
    source = reconstructed.lattice.matrix

    targets = [
        build_lattice_representation(original.lattice).vectors,
        original.lattice.matrix,
    ]
    best = None
    for target in targets:
        rot = rotation_between(source, target)
        delta = q_rec @ rot.T - q_orig
        frac = delta @ inv
        frac -= np.rint(frac)
        delta = frac @ original.lattice.matrix
        norms = np.linalg.norm(delta, axis=1)
        rmsd = float(np.sqrt(np.mean(norms**2)))
        mismatch = float(np.max(np.abs(source @ rot.T - target)))
        if best is None or rmsd < best[0]:
            best = (rmsd, float(np.max(norms)), mismatch)

    rmsd, max_pointwise, lattice_mismatch = best
    return ReconstructionReport(
        rmsd=rmsd,
        max_pointwise=max_pointwise,
        lattice_mismatch=lattice_mismatch,
        success=bool(rmsd < tol),
    )
