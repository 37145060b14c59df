import itertools

import numpy as np
import pytest

from comformer.fixtures import FixtureSpec, generate
from comformer.geometry import Lattice, cart_to_frac, random_rotation
from comformer.latticerepr import (
    build_lattice_representation,
    enumerate_lattice_vectors,
)
from comformer.symmetry import random_unimodular

DIAG235 = Lattice(np.diag([2.0, 3.0, 5.0]))


def brute_force_shortest(lattice, count, box=4):
    """Independent oracle: all vectors in a fixed box, same ordering rule."""
    rng = range(-box, box + 1)
    coeffs = np.array([c for c in itertools.product(rng, rng, rng) if any(c)])
    vecs = coeffs @ lattice.matrix
    lengths = np.linalg.norm(vecs, axis=1)
    keys = sorted(
        range(len(coeffs)),
        key=lambda i: (round(lengths[i], 9), tuple(-coeffs[i])),
    )
    return [(vecs[i], coeffs[i]) for i in keys[:count]]


class TestEnumerate:
    def test_diag_pair(self):
        out = enumerate_lattice_vectors(DIAG235, 2)
        assert np.allclose(out[0][0], [2, 0, 0]) and list(out[0][1]) == [1, 0, 0]
        assert np.allclose(out[1][0], [-2, 0, 0]) and list(out[1][1]) == [-1, 0, 0]

    def test_cubic_six(self):
        out = enumerate_lattice_vectors(Lattice(np.eye(3)), 6)
        expected = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, -1), (0, -1, 0), (-1, 0, 0)]
        assert [tuple(c) for _, c in out] == expected

    def test_skewed_shortest_is_combination(self):
        lat = Lattice([[1, 0, 0], [0.9, 0.1, 0], [0, 0, 1]])
        vec, coeff = enumerate_lattice_vectors(lat, 1)[0]
        assert np.linalg.norm(vec) == pytest.approx(np.sqrt(0.02), rel=1e-12)
        assert abs(coeff[0]) == 1 and abs(coeff[1]) == 1

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_brute_force(self, seed):
        lat = generate(FixtureSpec(family="triclinic", n_atoms=1, seed=seed)).lattice
        ours = enumerate_lattice_vectors(lat, 12)
        oracle = brute_force_shortest(lat, 12)
        for (v1, c1), (v2, c2) in zip(ours, oracle):
            assert np.allclose(v1, v2, atol=1e-9), (c1, c2)


class TestBuild:
    def test_diag235(self):
        rep = build_lattice_representation(DIAG235)
        assert np.allclose(rep.vectors, np.diag([2.0, 3.0, 5.0]))
        assert np.linalg.det(rep.vectors) > 0

    def test_cubic_identity(self):
        rep = build_lattice_representation(Lattice(np.eye(3)))
        assert np.allclose(rep.vectors, np.eye(3))

    def test_skewed_selection_and_flip(self):
        lat = Lattice([[1, 0, 0], [-0.6, 1, 0], [0, 0, 1.2]])
        rep = build_lattice_representation(lat)
        assert np.allclose(rep.e1, [1, 0, 0])
        # l1 + l2 is shorter than l2 and needs no flip
        assert np.allclose(rep.e2, [0.4, 1.0, 0.0], atol=1e-12)
        assert np.allclose(rep.e3, [0, 0, 1.2])
        assert np.linalg.det(rep.vectors) > 0

    @pytest.mark.parametrize("seed", range(6))
    def test_invariants(self, seed):
        lat = generate(FixtureSpec(family="triclinic", n_atoms=1, seed=seed)).lattice
        rep = build_lattice_representation(lat)
        # integer coefficients recovered from the vectors
        frac = np.array([cart_to_frac(lat, v) for v in rep.vectors])
        assert np.max(np.abs(frac - np.rint(frac))) < 1e-8
        assert np.array_equal(np.rint(frac).astype(int), rep.coeffs)
        # flip rule
        for m in (1, 2):
            cos = rep.vectors[m] @ rep.e1
            assert cos >= -1e-9
        # right-handed, volume preserving
        det = np.linalg.det(rep.vectors)
        assert det > 0
        assert det == pytest.approx(lat.volume, rel=1e-9)

    def test_rotation_equivariance(self):
        for lat in (generate(FixtureSpec(family="triclinic", n_atoms=1, seed=3)).lattice,
                    Lattice(np.eye(3))):
            rep = build_lattice_representation(lat)
            for seed in range(100):
                r = random_rotation(seed)
                rotated = build_lattice_representation(Lattice(lat.matrix @ r.T))
                assert np.allclose(rotated.vectors, rep.vectors @ r.T, atol=1e-9)

    def test_periodic_invariance_generic(self):
        lat = generate(FixtureSpec(family="triclinic", n_atoms=1, seed=5)).lattice
        rep = build_lattice_representation(lat)
        assert not rep.tie_degenerate
        rng = np.random.default_rng(0)
        for _ in range(100):
            u = random_unimodular(rng)
            re_described = build_lattice_representation(Lattice(u.astype(float) @ lat.matrix))
            assert np.allclose(re_described.vectors, rep.vectors, atol=1e-9)

    def test_tie_flags(self):
        assert build_lattice_representation(Lattice(np.eye(3))).tie_degenerate
        assert build_lattice_representation(DIAG235).tie_degenerate
        generic = generate(FixtureSpec(family="triclinic", n_atoms=1, seed=5)).lattice
        assert not build_lattice_representation(generic).tie_degenerate

    def test_mirror_flips_sign(self):
        # reflection of the cell negates the selected triple as a whole:
        # same lengths and internal angles, but the handedness correction
        # kicks in, which is what makes chiral atom bases distinguishable
        lat = generate(FixtureSpec(family="triclinic", n_atoms=1, seed=7)).lattice
        rep = build_lattice_representation(lat)
        s = np.diag([-1.0, 1.0, 1.0])
        mirrored = build_lattice_representation(Lattice(lat.matrix @ s))
        assert np.allclose(mirrored.vectors, -(rep.vectors @ s), atol=1e-9)
