"""SE(3)-invariant and SO(3)-equivariant crystal graph construction.

One graph node stands for an atom and all of its periodic duplicates. Edges
are built to every duplicate within the per-node cutoff radius given by the
k-th nearest neighbor (ties included), plus three designated self-edges per
node that encode the periodic pattern via the lattice representation.

Edge vectors point from the neighbor duplicate to the center:
``e = p[dst] - (p[src] + image @ L)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._core import radius_query
from .errors import (
    DegenerateLatticeError,
    DisconnectedError,
    InvalidKError,
    KindMismatchError,
    MissingSelfEdgesError,
)
from .geometry import Crystal, angles_to_basis
from .latticerepr import LatticeRepresentation, build_lattice_representation

#: neighbors within this absolute distance of the k-th nearest are kept too,
#: so the neighbor set is a function of geometry, not enumeration order
TIE_TOL = 1e-9

INVARIANT = "invariant"
EQUIVARIANT = "equivariant"


@dataclass(frozen=True)
class Edge:
    """Single-edge view; bulk data lives in the graph arrays."""

    src: int
    dst: int
    image: np.ndarray
    dist: float
    angles: Optional[np.ndarray] = None
    vec: Optional[np.ndarray] = None
    designated: int = 0  # 0 for ordinary edges, m in {1,2,3} for lattice self-edges


@dataclass(frozen=True)
class CrystalGraph:
    kind: str
    atomic_numbers: np.ndarray  # (n,)
    lattice_repr: LatticeRepresentation
    src: np.ndarray  # (E,)
    dst: np.ndarray  # (E,)
    images: np.ndarray  # (E, 3) int
    dists: np.ndarray  # (E,)
    per_node_radius: np.ndarray  # (n,)
    angles: Optional[np.ndarray] = None  # (E, 3), invariant graphs
    vecs: Optional[np.ndarray] = None  # (E, 3), equivariant graphs
    designated: np.ndarray = field(default=None)  # (n, 3) edge indices, -1 if absent

    @property
    def n_nodes(self) -> int:
        return len(self.atomic_numbers)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def edge(self, idx: int) -> Edge:
        m = 0
        if self.designated is not None:
            hit = np.nonzero(self.designated == idx)
            if len(hit[0]):
                m = int(hit[1][0]) + 1
        return Edge(
            src=int(self.src[idx]),
            dst=int(self.dst[idx]),
            image=self.images[idx],
            dist=float(self.dists[idx]),
            angles=None if self.angles is None else self.angles[idx],
            vec=None if self.vecs is None else self.vecs[idx],
            designated=m,
        )

    def designated_edge_indices(self, node: int) -> np.ndarray:
        """Edge indices of the three lattice self-edges of ``node``."""
        if self.designated is None or np.any(self.designated[node] < 0):
            raise MissingSelfEdgesError(f"node {node} lacks designated self-edges")
        return self.designated[node]


@dataclass(frozen=True)
class NeighborLists:
    """Flat (center, neighbor-image) pairs from the periodic kNN search."""

    center: np.ndarray  # (M,)
    owner: np.ndarray  # (M,) source atom index j
    images: np.ndarray  # (M, 3) integer image of j, relative to input positions
    dists: np.ndarray  # (M,)
    radius: np.ndarray  # (n,) k-th nearest distance per center


def periodic_knn(crystal: Crystal, k: int, tie_tol: float = TIE_TOL) -> NeighborLists:
    """Exhaustive periodic k-nearest-neighbor search.

    For each atom i the cutoff is the distance of its k-th nearest periodic
    neighbor (own zero-offset copy excluded); all duplicates within
    ``radius + tie_tol`` are returned. The image search box grows until it
    provably covers every returned distance.
    """
    if k < 1:
        raise InvalidKError(f"k must be >= 1, got {k}")
    lat = crystal.lattice
    n = crystal.n_atoms
    frac = crystal.frac_positions
    shift = -np.floor(frac)
    wfrac = frac + shift
    high = wfrac >= 1.0  # floor(-1e-18) rounding
    wfrac[high] -= 1.0
    shift[high] -= 1.0
    pos_w = wfrac @ lat.matrix

    spacings = lat.plane_spacings()
    density = n / lat.volume
    r = 1.15 * ((3.0 * (k + 1)) / (4.0 * np.pi * density)) ** (1.0 / 3.0)
    r = max(r, 1e-3)

    for _ in range(48):
        bounds = np.ceil((r + tie_tol) / spacings).astype(int)
        if float(np.prod((2 * bounds + 1).astype(float))) > 2_000_000:
            raise DegenerateLatticeError(
                "image search box exploded; cell is numerically degenerate"
            )
        axes = [np.arange(-b, b + 1) for b in bounds]
        offsets = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        # zero offset first so each center's own copy has candidate index == i
        zero_at = int(np.nonzero(np.all(offsets == 0, axis=1))[0][0])
        offsets[[0, zero_at]] = offsets[[zero_at, 0]]

        cand = (wfrac[None, :, :] + offsets[:, None, :]).reshape(-1, 3) @ lat.matrix
        counts, cidx, cdist = radius_query(cand, pos_w, r)

        center = np.repeat(np.arange(n), counts)
        keep = cidx != center  # drop each center's zero-offset self
        center, cidx, cdist = center[keep], cidx[keep], cdist[keep]

        per_count = np.bincount(center, minlength=n)
        if np.all(per_count >= k):
            order = np.lexsort((cdist, center))
            center, cidx, cdist = center[order], cidx[order], cdist[order]
            seg = np.concatenate(([0], np.cumsum(per_count)))
            radius = cdist[seg[:-1] + (k - 1)]
            if np.all(radius + tie_tol <= r):
                break
        r *= 1.5
    else:  # pragma: no cover
        raise RuntimeError("neighbor search radius did not converge")

    within = cdist <= radius[center] + tie_tol
    center, cidx, cdist = center[within], cidx[within], cdist[within]
    owner = cidx % n
    images = offsets[cidx // n] + shift[owner] - shift[center]
    return NeighborLists(
        center=center,
        owner=owner,
        images=np.rint(images).astype(np.int64),
        dists=cdist,
        radius=radius,
    )


def build_invariant_graph(crystal: Crystal, k: int) -> CrystalGraph:
    """Crystal graph with edge features (distance, three lattice angles)."""
    return _build(crystal, k, INVARIANT)


def build_equivariant_graph(crystal: Crystal, k: int) -> CrystalGraph:
    """Crystal graph with edge features (distance, edge vector)."""
    return _build(crystal, k, EQUIVARIANT)


def _build(crystal: Crystal, k: int, kind: str) -> CrystalGraph:
    nb = periodic_knn(crystal, k)
    repr_ = build_lattice_representation(crystal.lattice)
    n = crystal.n_atoms
    pos = crystal.positions

    src = np.concatenate([nb.owner, np.tile(np.arange(n), 3)])
    dst = np.concatenate([nb.center, np.tile(np.arange(n), 3)])
    images = np.concatenate([nb.images, np.repeat(repr_.coeffs, n, axis=0)])
    designated_m = np.concatenate(
        [np.zeros(len(nb.center), dtype=np.int64), np.repeat([1, 2, 3], n)]
    )

    vecs = pos[dst] - (pos[src] + images @ crystal.lattice.matrix)
    dists = np.linalg.norm(vecs, axis=1)
    if np.any(dists[designated_m == 0] <= 1e-8):
        raise ValueError("coincident atoms produce zero-length edges")

    order = np.lexsort((images[:, 2], images[:, 1], images[:, 0], src, dists, dst))
    src, dst, images = src[order], dst[order], images[order]
    vecs, dists, designated_m = vecs[order], dists[order], designated_m[order]

    designated = np.full((n, 3), -1, dtype=np.int64)
    tagged = np.nonzero(designated_m)[0]
    designated[dst[tagged], designated_m[tagged] - 1] = tagged

    _check_connected(n, src, dst)

    angles = vec_arrays = None
    if kind == INVARIANT:
        angles = angles_to_basis(vecs, repr_.vectors)
    elif kind == EQUIVARIANT:
        vec_arrays = vecs
    else:
        raise ValueError(f"unknown graph kind {kind!r}")

    return CrystalGraph(
        kind=kind,
        atomic_numbers=crystal.species.copy(),
        lattice_repr=repr_,
        src=src,
        dst=dst,
        images=images,
        dists=dists,
        per_node_radius=nb.radius,
        angles=angles,
        vecs=vec_arrays,
        designated=designated,
    )


def _undirected_reach(n: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    loopless = src != dst
    a = np.concatenate([src[loopless], dst[loopless]])
    b = np.concatenate([dst[loopless], src[loopless]])
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = np.array([0])
    while len(frontier):
        on = np.isin(a, frontier)
        nxt = np.unique(b[on])
        nxt = nxt[~seen[nxt]]
        seen[nxt] = True
        frontier = nxt
    return seen


def _check_connected(n: int, src: np.ndarray, dst: np.ndarray) -> None:
    seen = _undirected_reach(n, src, dst)
    if not np.all(seen):
        missing = int(np.count_nonzero(~seen))
        raise DisconnectedError(
            f"crystal graph splits into separate groups ({missing} of {n} nodes "
            "unreachable); increase k so the cutoff radius bridges them"
        )


def is_strongly_connected(graph: CrystalGraph) -> bool:
    """Whether every node is reachable from every other one.

    Each kNN edge has a geometric mirror (the reverse displacement exists at
    the same distance), so reachability over the undirected edge set decides
    the question.
    """
    return bool(np.all(_undirected_reach(graph.n_nodes, graph.src, graph.dst)))


def _feature_rows(graph: CrystalGraph) -> np.ndarray:
    """Per-edge invariant feature rows (dist, cosines to the lattice basis).

    Cosines rather than angles: near-collinear edges would amplify coordinate
    noise through arccos far beyond the comparison tolerance. For equivariant
    graphs the cosines are recomputed against the graph's own lattice
    representation so the comparison is rotation invariant.
    """
    basis = graph.lattice_repr.vectors
    if graph.kind == INVARIANT:
        cos = np.cos(graph.angles)
    else:
        unit = graph.vecs / graph.dists[:, None]
        cos = unit @ (basis / np.linalg.norm(basis, axis=1, keepdims=True)).T
    return np.column_stack([graph.dists, cos])


def _matched_deviation(r1: np.ndarray, r2: np.ndarray) -> float:
    """Greedy global matching of feature rows; max matched row distance.

    Robust against sort-order swaps of rows that agree only up to noise:
    pairs are accepted in ascending distance order.
    """
    m = len(r1)
    if m == 0:
        return 0.0
    diff = np.max(np.abs(r1[:, None, :] - r2[None, :, :]), axis=2)
    order = np.argsort(diff, axis=None, kind="stable")
    used1 = np.zeros(m, dtype=bool)
    used2 = np.zeros(m, dtype=bool)
    worst = 0.0
    taken = 0
    for flat in order:
        i, j = divmod(int(flat), m)
        if used1[i] or used2[j]:
            continue
        used1[i] = used2[j] = True
        worst = max(worst, float(diff[i, j]))
        taken += 1
        if taken == m:
            break
    return worst


def graph_deviation(g1: CrystalGraph, g2: CrystalGraph) -> float:
    """Largest per-node edge-feature deviation between two graphs.

    Edges are matched per destination node; returns ``inf`` on any structural
    mismatch (size, species multiset, per-node edge counts).
    """
    if g1.kind != g2.kind:
        raise KindMismatchError(f"cannot compare {g1.kind} with {g2.kind}")
    if g1.n_nodes != g2.n_nodes:
        return np.inf
    if not np.array_equal(np.sort(g1.atomic_numbers), np.sort(g2.atomic_numbers)):
        return np.inf
    f1 = _feature_rows(g1)
    f2 = _feature_rows(g2)
    worst = 0.0
    for node in range(g1.n_nodes):
        r1 = f1[g1.dst == node]
        r2 = f2[g2.dst == node]
        if r1.shape != r2.shape:
            return np.inf
        worst = max(worst, _matched_deviation(r1, r2))
    return worst


def compare_graphs(g1: CrystalGraph, g2: CrystalGraph, tol: float = 1e-9) -> bool:
    """Whether two graphs carry the same geometry within ``tol``."""
    return graph_deviation(g1, g2) <= tol


def locate_designated_edges(
    kind: str,
    lattice_repr: LatticeRepresentation,
    src: np.ndarray,
    dst: np.ndarray,
    dists: np.ndarray,
    angles: Optional[np.ndarray],
    vecs: Optional[np.ndarray],
    n: int,
    tol: float = 1e-6,
) -> np.ndarray:
    """Recover the (n, 3) designated self-edge index table from edge data.

    The lattice self-edge of node i for basis vector m is a self-loop whose
    vector is ``-e_m``: matched by distance plus either the m-th angle being
    pi (invariant) or the vector itself (equivariant). Unmatched slots are
    left as -1.
    """
    table = np.full((n, 3), -1, dtype=np.int64)
    lengths = lattice_repr.lengths
    self_loop = np.nonzero(src == dst)[0]
    for idx in self_loop:
        node = int(src[idx])
        for m in range(3):
            if table[node, m] >= 0:
                continue
            if abs(dists[idx] - lengths[m]) > tol * max(1.0, lengths[m]):
                continue
            if kind == INVARIANT:
                if abs(angles[idx, m] - np.pi) <= 1e-5:
                    table[node, m] = idx
                    break
            else:
                if np.allclose(vecs[idx], -lattice_repr.vectors[m], atol=tol):
                    table[node, m] = idx
                    break
    return table
