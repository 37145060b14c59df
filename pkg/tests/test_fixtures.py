import numpy as np
import pytest

from comformer.errors import DisconnectedError, InvalidSpecError
from comformer.fixtures import (
    FAMILIES,
    MIN_SEPARATION,
    FixtureSpec,
    generate,
    make_supercell,
    _min_periodic_separation,
)
from comformer.graph import build_invariant_graph, is_strongly_connected
from comformer.latticerepr import build_lattice_representation
from comformer.symmetry import brute_force_isometric, mirror


class TestGenerate:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_reproducible(self, family):
        spec = FixtureSpec(family=family, n_atoms=4, seed=11)
        a = generate(spec)
        b = generate(spec)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.lattice.matrix, b.lattice.matrix)
        assert np.array_equal(a.species, b.species)

    @pytest.mark.parametrize("seed", range(5))
    def test_min_separation(self, seed):
        crystal = generate(FixtureSpec(family="triclinic", n_atoms=10, seed=seed))
        frac = crystal.frac_positions
        assert _min_periodic_separation(crystal.lattice, frac) >= MIN_SEPARATION - 1e-9

    def test_triclinic_condition_bound(self):
        for seed in range(10):
            crystal = generate(FixtureSpec(family="triclinic", n_atoms=2, seed=seed))
            assert np.linalg.cond(crystal.lattice.matrix) <= 20.0

    def test_unknown_family(self):
        with pytest.raises(InvalidSpecError):
            generate(FixtureSpec(family="quasicrystal"))

    def test_polonium_cell(self):
        po = generate(FixtureSpec(family="cubic", n_atoms=1))
        assert po.n_atoms == 1 and po.species[0] == 84
        assert np.allclose(po.lattice.matrix, np.diag([3.35] * 3))

    def test_jitter(self):
        plain = generate(FixtureSpec(family="triclinic", n_atoms=5, seed=3))
        moved = generate(FixtureSpec(family="triclinic", n_atoms=5, seed=3, jitter=0.01))
        delta = np.linalg.norm(plain.positions - moved.positions, axis=1)
        assert np.all(delta > 0) and np.max(delta) < 0.1
        # jitter preserves connectivity at the default k
        assert is_strongly_connected(build_invariant_graph(moved, 12))


class TestChiralFixture:
    def test_verified_chiral_by_oracle(self):
        helix = generate(FixtureSpec(family="chiral-helix"))
        assert not brute_force_isometric(helix, mirror(helix, [1.0, 0.0, 0.0]))

    def test_not_tie_degenerate(self):
        helix = generate(FixtureSpec(family="chiral-helix"))
        assert not build_lattice_representation(helix.lattice).tie_degenerate


class TestTwoCluster:
    def test_disconnected_then_connected(self):
        crystal = generate(FixtureSpec(family="two-cluster"))
        with pytest.raises(DisconnectedError):
            build_invariant_graph(crystal, 2)
        assert is_strongly_connected(build_invariant_graph(crystal, 8))


class TestSupercell:
    def test_atom_count_and_volume(self):
        base = generate(FixtureSpec(family="triclinic", n_atoms=3, seed=5))
        sc = make_supercell(base, 2)
        assert sc.n_atoms == 8 * base.n_atoms
        assert sc.lattice.volume == pytest.approx(8 * base.lattice.volume, rel=1e-12)

    def test_same_infinite_structure(self):
        # each supercell atom sees the same neighbor geometry as its base copy;
        # designated self-edges differ (the cell is not minimal), so compare
        # the kNN feature multisets per atom
        base = generate(FixtureSpec(family="triclinic", n_atoms=2, seed=6))
        sc = make_supercell(base, 2)
        k = 8
        gb = build_invariant_graph(base, k)
        gs = build_invariant_graph(sc, k)

        def knn_multiset(g, node):
            ordinary = np.ones(g.n_edges, dtype=bool)
            ordinary[g.designated[g.designated >= 0]] = False
            mask = ordinary & (g.dst == node)
            rows = np.round(np.column_stack([g.dists[mask], np.cos(g.angles[mask])]), 9)
            return rows[np.lexsort(rows.T[::-1])]

        for node in range(sc.n_atoms):
            assert np.allclose(knn_multiset(gs, node), knn_multiset(gb, node % 2), atol=1e-8)

    def test_supercell_spec(self):
        spec = FixtureSpec(
            family="supercell", base=FixtureSpec(family="cubic", n_atoms=1), factor=2
        )
        assert generate(spec).n_atoms == 8
