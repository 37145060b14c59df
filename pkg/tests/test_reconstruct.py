import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from comformer.errors import (
    InconsistentPlacementError,
    KindMismatchError,
    SpeciesMismatchError,
)
from comformer.fixtures import FixtureSpec, generate, random_crystal
from comformer.geometry import Crystal, Lattice, angle_between, random_rotation
from comformer.graph import Edge, build_equivariant_graph, build_invariant_graph
from comformer.latticerepr import build_lattice_representation
from comformer.reconstruct import (
    match_structures,
    place_neighbor,
    rebuild_lattice_from_graph,
    reconstruct_crystal,
    reconstruct_crystal_equivariant,
)
from comformer.symmetry import apply_isometry, mirror

CUBIC1 = Crystal(lattice=Lattice(np.eye(3)), positions=np.zeros((1, 3)), species=[84])
DIAG235 = Crystal(
    lattice=Lattice(np.diag([2.0, 3.0, 5.0])), positions=np.zeros((1, 3)), species=[84]
)


class TestRebuildLattice:
    def test_diag235_exact(self):
        basis = rebuild_lattice_from_graph(build_invariant_graph(DIAG235, 6))
        assert np.allclose(basis, np.diag([2.0, 3.0, 5.0]), atol=1e-12)

    def test_cubic_identity(self):
        basis = rebuild_lattice_from_graph(build_invariant_graph(CUBIC1, 6))
        assert np.allclose(basis, np.eye(3), atol=1e-12)

    def test_triclinic_gram(self):
        crystal = random_crystal(seed=11, n_atoms=3)
        rep = build_lattice_representation(crystal.lattice)
        basis = rebuild_lattice_from_graph(build_invariant_graph(crystal, 8))
        assert np.allclose(basis @ basis.T, rep.vectors @ rep.vectors.T, atol=1e-9)
        assert np.linalg.det(basis) > 0

    def test_needs_invariant_kind(self):
        with pytest.raises(KindMismatchError):
            rebuild_lattice_from_graph(build_equivariant_graph(CUBIC1, 6))


class TestPlaceNeighbor:
    def test_cubic_hand_solve(self):
        edge = Edge(
            src=0, dst=0, image=np.array([1, 0, 0]), dist=1.0,
            angles=np.array([np.pi, np.pi / 2, np.pi / 2]),
        )
        assert np.allclose(place_neighbor(edge, np.eye(3)), [-1, 0, 0], atol=1e-12)

    def test_self_edges_give_negated_basis(self):
        g = build_invariant_graph(DIAG235, 6)
        basis = rebuild_lattice_from_graph(g)
        for m, idx in enumerate(g.designated_edge_indices(0)):
            p = place_neighbor(g.edge(int(idx)), basis)
            assert np.allclose(p, -basis[m], atol=1e-10)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_generating_geometry(self, seed):
        crystal = random_crystal(seed=seed, n_atoms=4)
        g = build_invariant_graph(crystal, 6)
        basis = rebuild_lattice_from_graph(g)
        for e in range(g.n_edges):
            edge = g.edge(e)
            p = place_neighbor(edge, basis)
            assert np.linalg.norm(p) == pytest.approx(edge.dist, rel=1e-10)
            for m in range(3):
                assert np.cos(angle_between(p, basis[m])) == pytest.approx(
                    np.cos(edge.angles[m]), abs=1e-9
                )


class TestReconstruct:
    @pytest.mark.parametrize(
        "spec",
        [
            FixtureSpec(family="cubic", n_atoms=1),
            FixtureSpec(family="triclinic", n_atoms=6, seed=1),
            FixtureSpec(family="chiral-helix"),
            FixtureSpec(family="rocksalt"),
        ],
    )
    def test_roundtrip(self, spec):
        crystal = generate(spec)
        rec = reconstruct_crystal(build_invariant_graph(crystal, 8))
        report = match_structures(crystal, rec)
        assert report.rmsd < 1e-6
        assert report.success

    def test_equivariant_roundtrip_and_cross_agreement(self):
        crystal = random_crystal(seed=12, n_atoms=5)
        rec_i = reconstruct_crystal(build_invariant_graph(crystal, 8))
        rec_e = reconstruct_crystal_equivariant(build_equivariant_graph(crystal, 8))
        assert match_structures(crystal, rec_e).rmsd < 1e-6
        # the two reconstruction paths agree with each other
        assert match_structures(rec_e, rec_i).rmsd < 1e-9

    def test_frame_independence(self):
        crystal = random_crystal(seed=13, n_atoms=4)
        moved = apply_isometry(crystal, random_rotation(5), [3.0, -1.0, 0.5])
        rec = reconstruct_crystal(build_invariant_graph(moved, 8))
        assert match_structures(crystal, rec).rmsd < 1e-6

    def test_corrupt_angle_detected(self):
        crystal = random_crystal(seed=14, n_atoms=4)
        g = build_invariant_graph(crystal, 8)
        angles = g.angles.copy()
        target = int(np.nonzero(g.src != g.dst)[0][4])
        angles[target, 1] += 0.1
        bad = dataclasses.replace(g, angles=angles)
        with pytest.raises(InconsistentPlacementError):
            reconstruct_crystal(bad)

    def test_corrupt_vec_detected(self):
        crystal = random_crystal(seed=15, n_atoms=4)
        g = build_equivariant_graph(crystal, 8)
        vecs = g.vecs.copy()
        target = int(np.nonzero(g.src != g.dst)[0][2])
        vecs[target] += [0.05, -0.02, 0.04]
        bad = dataclasses.replace(g, vecs=vecs)
        with pytest.raises(InconsistentPlacementError):
            reconstruct_crystal_equivariant(bad)

    def test_wrong_kind(self):
        with pytest.raises(KindMismatchError):
            reconstruct_crystal(build_equivariant_graph(CUBIC1, 6))
        with pytest.raises(KindMismatchError):
            reconstruct_crystal_equivariant(build_invariant_graph(CUBIC1, 6))


class TestRoundtripProperty:
    @given(
        seed=st.integers(0, 10_000),
        n=st.integers(1, 10),
        k=st.integers(4, 14),
    )
    @settings(max_examples=60, deadline=None)
    def test_any_random_crystal(self, seed, n, k):
        crystal = random_crystal(seed=seed, n_atoms=n)
        rec = reconstruct_crystal(build_invariant_graph(crystal, k))
        assert match_structures(crystal, rec).rmsd < 1e-8


class TestMatchStructures:
    def test_identical(self):
        crystal = random_crystal(seed=16, n_atoms=5)
        report = match_structures(crystal, crystal)
        assert report.rmsd == pytest.approx(0.0, abs=1e-12)
        assert report.max_pointwise == pytest.approx(0.0, abs=1e-12)

    def test_jitter_closed_form(self):
        crystal = random_crystal(seed=17, n_atoms=8)
        positions = crystal.positions.copy()
        delta = np.array([0.006, -0.008, 0.0])  # |delta| = 0.01
        positions[3] += delta
        jittered = dataclasses.replace(crystal, positions=positions)
        report = match_structures(crystal, jittered)
        assert report.rmsd == pytest.approx(0.01 / np.sqrt(8), rel=1e-6)
        assert report.max_pointwise == pytest.approx(0.01, rel=1e-6)

    def test_species_mismatch(self):
        a = random_crystal(seed=18, n_atoms=3)
        b = dataclasses.replace(a, species=a.species[::-1].copy())
        if not np.array_equal(a.species, b.species):
            with pytest.raises(SpeciesMismatchError):
                match_structures(a, b)

    def test_rmsd_le_max_pointwise(self):
        for seed in range(5):
            crystal = random_crystal(seed=seed, n_atoms=4)
            rec = reconstruct_crystal(build_invariant_graph(crystal, 6))
            report = match_structures(crystal, rec)
            assert report.rmsd <= report.max_pointwise + 1e-15


class TestChirality:
    def test_reconstruction_preserves_handedness(self):
        helix = generate(FixtureSpec(family="chiral-helix"))
        rec = reconstruct_crystal(build_invariant_graph(helix, 8))
        assert match_structures(helix, rec).rmsd < 1e-6
        assert match_structures(mirror(helix, [1.0, 0.0, 0.0]), rec).rmsd > 0.1
