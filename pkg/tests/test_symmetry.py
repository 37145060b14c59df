import numpy as np
import pytest

from comformer.errors import ImproperRotationError, NonUnimodularError
from comformer.fixtures import FixtureSpec, generate, random_crystal
from comformer.geometry import random_rotation, wrap_to_cell
from comformer.graph import build_invariant_graph, compare_graphs
from comformer.symmetry import (
    apply_isometry,
    apply_unimodular,
    brute_force_isometric,
    fuzz_invariance,
    mirror,
    random_unimodular,
    shift_origin,
)


def fingerprint_equal(c1, c2, k=8, tol=1e-9):
    return compare_graphs(build_invariant_graph(c1, k), build_invariant_graph(c2, k), tol)


class TestApplyIsometry:
    def test_identity(self):
        crystal = random_crystal(seed=0, n_atoms=3)
        same = apply_isometry(crystal, np.eye(3), np.zeros(3))
        assert np.allclose(same.positions, crystal.positions)
        assert np.allclose(same.lattice.matrix, crystal.lattice.matrix)

    def test_quarter_turn_cubic(self):
        crystal = generate(FixtureSpec(family="cubic", n_atoms=1))
        rz = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        rotated = apply_isometry(crystal, rz, np.zeros(3))
        assert np.linalg.det(rotated.lattice.matrix) == pytest.approx(
            np.linalg.det(crystal.lattice.matrix)
        )
        assert np.allclose(rotated.lattice.matrix[0], [0.0, 3.35, 0.0])
        assert fingerprint_equal(crystal, rotated)

    def test_improper_rejected(self):
        crystal = random_crystal(seed=1, n_atoms=2)
        with pytest.raises(ImproperRotationError):
            apply_isometry(crystal, np.diag([-1.0, 1.0, 1.0]), np.zeros(3))

    def test_fingerprint_stable(self):
        crystal = random_crystal(seed=2, n_atoms=4)
        moved = apply_isometry(crystal, random_rotation(7), [1.0, -2.0, 0.3])
        assert fingerprint_equal(crystal, moved)


class TestShiftOrigin:
    def test_zero_shift(self):
        crystal = wrap_to_cell(random_crystal(seed=3, n_atoms=3))
        same = shift_origin(crystal, [0.0, 0.0, 0.0])
        assert np.allclose(same.positions, crystal.positions, atol=1e-12)

    def test_fingerprint_stable(self):
        crystal = random_crystal(seed=4, n_atoms=2)
        assert fingerprint_equal(crystal, shift_origin(crystal, [0.5, 0.0, 0.0]))

    def test_group_property(self):
        crystal = wrap_to_cell(random_crystal(seed=5, n_atoms=3))
        t = np.array([0.3, 0.7, 0.1])
        back = shift_origin(shift_origin(crystal, t), 1.0 - t)
        assert np.allclose(
            np.sort(back.positions, axis=0), np.sort(crystal.positions, axis=0), atol=1e-9
        )


class TestApplyUnimodular:
    def test_identity(self):
        crystal = random_crystal(seed=6, n_atoms=3)
        same = apply_unimodular(crystal, np.eye(3, dtype=int))
        assert np.allclose(same.lattice.matrix, crystal.lattice.matrix)

    def test_shear_example(self):
        # L' = [l1 + l2, l2, l3] describes the same periodic pattern
        crystal = random_crystal(seed=7, n_atoms=3)
        u = np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]])
        sheared = apply_unimodular(crystal, u)
        assert sheared.lattice.volume == pytest.approx(crystal.lattice.volume, rel=1e-12)
        assert np.allclose(sheared.lattice.matrix[0],
                           crystal.lattice.matrix[0] + crystal.lattice.matrix[1])
        assert fingerprint_equal(crystal, sheared)

    def test_many_random_redescriptions(self):
        crystal = random_crystal(seed=8, n_atoms=3)
        base = build_invariant_graph(crystal, 8)
        rng = np.random.default_rng(1)
        for _ in range(100):
            u = random_unimodular(rng)
            assert round(float(np.linalg.det(u))) == 1
            assert np.max(np.abs(u)) <= 2
            other = build_invariant_graph(apply_unimodular(crystal, u), 8)
            assert compare_graphs(base, other, tol=1e-9)

    def test_rejects_bad_matrices(self):
        crystal = random_crystal(seed=9, n_atoms=2)
        with pytest.raises(NonUnimodularError):
            apply_unimodular(crystal, np.diag([1, 1, -1]))
        with pytest.raises(NonUnimodularError):
            apply_unimodular(crystal, np.eye(3) * 1.5)


class TestMirror:
    def test_involution(self):
        crystal = random_crystal(seed=10, n_atoms=3)
        twice = mirror(mirror(crystal, [0.0, 1.0, 0.0]), [0.0, 1.0, 0.0])
        assert fingerprint_equal(crystal, twice)

    def test_achiral_rocksalt_unchanged(self):
        rock = generate(FixtureSpec(family="rocksalt"))
        assert fingerprint_equal(rock, mirror(rock, [1.0, 0.0, 0.0]), k=12)

    def test_chiral_helix_changes(self):
        helix = generate(FixtureSpec(family="chiral-helix"))
        assert not fingerprint_equal(helix, mirror(helix, [0.0, 0.0, 1.0]))

    def test_preserves_cell_volume(self):
        crystal = random_crystal(seed=11, n_atoms=2)
        reflected = mirror(crystal, [1.0, 1.0, 0.0])
        assert reflected.lattice.volume == pytest.approx(crystal.lattice.volume)
        assert np.linalg.det(reflected.lattice.matrix) == pytest.approx(
            -np.linalg.det(crystal.lattice.matrix)
        )


class TestBruteForceOracle:
    def test_helix_is_chiral(self):
        helix = generate(FixtureSpec(family="chiral-helix"))
        assert brute_force_isometric(helix, helix)
        assert not brute_force_isometric(helix, mirror(helix, [1.0, 0.0, 0.0]))

    def test_rocksalt_is_achiral(self):
        rock = generate(FixtureSpec(family="rocksalt"))
        assert brute_force_isometric(rock, mirror(rock, [0.0, 1.0, 0.0]))

    def test_detects_rigid_copies(self):
        helix = generate(FixtureSpec(family="chiral-helix"))
        moved = apply_isometry(helix, random_rotation(9), [0.7, 1.1, -0.4])
        assert brute_force_isometric(helix, moved)

    def test_distinguishes_different_crystals(self):
        a = random_crystal(seed=12, n_atoms=3)
        b = random_crystal(seed=13, n_atoms=3)
        if not np.array_equal(np.sort(a.species), np.sort(b.species)):
            assert not brute_force_isometric(a, b)


class TestFuzzInvariance:
    def test_zero_failures_on_generic_fixtures(self):
        for crystal in (
            random_crystal(seed=2, n_atoms=6),
            random_crystal(seed=9, n_atoms=3),
            generate(FixtureSpec(family="chiral-helix")),
        ):
            report = fuzz_invariance(crystal, k=8, trials=20, seed=0)
            assert report.failed == 0
            assert report.worst_deviation < 1e-9

    def test_seed_stable(self):
        crystal = random_crystal(seed=2, n_atoms=4)
        a = fuzz_invariance(crystal, k=6, trials=10, seed=42)
        b = fuzz_invariance(crystal, k=6, trials=10, seed=42)
        assert a == b

    def test_mirror_negative_control(self):
        helix = generate(FixtureSpec(family="chiral-helix"))
        report = fuzz_invariance(helix, k=8, trials=10, seed=0, include_mirror=True)
        assert report.per_kind["mirror"]["failed"] > 0
        assert report.per_kind["rotation"]["failed"] == 0


class TestTransformInvariants:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_preserve_species_and_volume(self, seed):
        crystal = random_crystal(seed=seed, n_atoms=4)
        rng = np.random.default_rng(seed)
        transformed = [
            apply_isometry(crystal, random_rotation(rng), rng.uniform(-3, 3, 3)),
            shift_origin(crystal, rng.uniform(0, 1, 3)),
            apply_unimodular(crystal, random_unimodular(rng)),
            mirror(crystal, rng.normal(size=3)),
        ]
        for other in transformed:
            assert other.n_atoms == crystal.n_atoms
            assert np.array_equal(np.sort(other.species), np.sort(crystal.species))
            assert other.lattice.volume == pytest.approx(crystal.lattice.volume, rel=1e-9)
