"""Deterministic synthetic crystals covering the geometric regimes we test.

Families:

* ``cubic`` / ``orthorhombic`` / ``triclinic``: random atoms in cells of the
  respective shape (triclinic cells are rejection-sampled to condition
  number <= 20);
* ``chiral-helix``: a four-atom helical motif in a skewed cell, verified
  chiral by the brute-force isometry oracle;
* ``rocksalt``: achiral NaCl reference;
* ``two-cluster``: two well-separated atom groups, disconnected at small k;
* supercells via :func:`make_supercell`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InvalidSpecError
from .geometry import Crystal, Lattice

FAMILIES = ("cubic", "orthorhombic", "triclinic", "chiral-helix", "rocksalt", "two-cluster")

#: atoms closer than this (A, across periodic images) are rejected
MIN_SEPARATION = 0.5


@dataclass(frozen=True)
class FixtureSpec:
    family: str
    n_atoms: int = 1
    seed: int = 0
    jitter: float = 0.0
    base: Optional["FixtureSpec"] = None  # for family == "supercell"
    factor: int = 2


def _min_periodic_separation(lattice: Lattice, frac: np.ndarray) -> float:
    shifts = np.array(list(itertools.product((-1, 0, 1), repeat=3)))
    best = np.inf
    for i in range(len(frac)):
        diff = frac - frac[i]
        cand = (diff[:, None, :] + shifts[None, :, :]).reshape(-1, 3) @ lattice.matrix
        dist = np.linalg.norm(cand, axis=1)
        dist[dist < 1e-12] = np.inf  # the atom's own zero image
        best = min(best, float(dist.min()))
    return best


def _random_basis(lattice: Lattice, n: int, rng) -> np.ndarray:
    """Sequential placement with per-atom rejection below the separation floor."""
    frac = np.empty((n, 3))
    for i in range(n):
        for _ in range(400):
            f = rng.uniform(0.0, 1.0, size=3)
            if i == 0:
                frac[i] = f
                break
            diff = frac[:i] - f
            diff -= np.rint(diff)
            if np.linalg.norm(diff @ lattice.matrix, axis=1).min() >= MIN_SEPARATION:
                frac[i] = f
                break
        else:
            raise InvalidSpecError(
                f"cannot place {n} atoms {MIN_SEPARATION} A apart in this cell"
            )
    return frac @ lattice.matrix


def _cell_scale(n: int) -> float:
    # keep the atom density roughly constant as n grows
    return 4.0 * max(1.0, (n / 4.0) ** (1.0 / 3.0))


def generate(spec: FixtureSpec) -> Crystal:
    """Deterministic crystal for a fixture specification."""
    if spec.family == "supercell":
        if spec.base is None or spec.factor < 1:
            raise InvalidSpecError("supercell spec needs a base spec and factor >= 1")
        crystal = make_supercell(generate(spec.base), spec.factor)
    elif spec.family in ("cubic", "orthorhombic", "triclinic"):
        if spec.n_atoms < 1:
            raise InvalidSpecError("n_atoms must be >= 1")
        rng = np.random.default_rng(spec.seed)
        a = _cell_scale(spec.n_atoms)
        if spec.family == "cubic":
            lattice = Lattice(np.diag([a, a, a]))
        elif spec.family == "orthorhombic":
            lattice = Lattice(np.diag(a * rng.uniform(0.75, 1.35, size=3)))
        else:
            lattice = _random_triclinic(a, rng)
        if spec.n_atoms == 1 and spec.family == "cubic":
            # polonium-style single-atom reference cell
            crystal = Crystal(
                lattice=Lattice(np.diag([3.35, 3.35, 3.35])),
                positions=np.zeros((1, 3)),
                species=[84],
            )
        else:
            positions = _random_basis(lattice, spec.n_atoms, rng)
            species = rng.integers(1, 84, size=spec.n_atoms)
            crystal = Crystal(lattice=lattice, positions=positions, species=species)
    elif spec.family == "chiral-helix":
        lattice = Lattice(np.array([[6.1, 0.0, 0.0], [0.53, 6.9, 0.0], [0.31, 0.47, 7.7]]))
        t = np.arange(4)
        phase = 0.9 * t + 0.4
        positions = np.column_stack(
            [
                3.0 + 1.3 * np.cos(phase),
                3.2 + 1.3 * np.sin(phase),
                1.1 + 1.45 * t,
            ]
        )
        crystal = Crystal(lattice=lattice, positions=positions, species=[6, 7, 8, 14])
    elif spec.family == "rocksalt":
        a = 5.64
        frac = np.array(
            [
                [0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5],
                [0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.5], [0.5, 0.5, 0.5],
            ]
        )
        lattice = Lattice(np.diag([a, a, a]))
        crystal = Crystal(
            lattice=lattice,
            positions=frac @ lattice.matrix,
            species=[11] * 4 + [17] * 4,
        )
    elif spec.family == "two-cluster":
        lattice = Lattice(np.diag([20.0, 12.0, 12.0]))
        cluster = np.array([[0.0, 0.0, 0.0], [1.1, 0.0, 0.0], [0.0, 1.0, 0.2]])
        positions = np.vstack([cluster, cluster + np.array([8.0, 0.3, 0.1])])
        crystal = Crystal(lattice=lattice, positions=positions, species=[6, 6, 6, 8, 8, 8])
    else:
        raise InvalidSpecError(f"unknown fixture family {spec.family!r}")

    if spec.jitter > 0.0:
        rng = np.random.default_rng(spec.seed + 7919)
        crystal = replace(
            crystal,
            positions=crystal.positions + spec.jitter * rng.normal(size=crystal.positions.shape),
        )
    return crystal


def _random_triclinic(scale: float, rng, max_condition: float = 20.0) -> Lattice:
    for _ in range(500):
        skew = rng.uniform(-0.45, 0.45, size=(3, 3))
        np.fill_diagonal(skew, 0.0)
        matrix = (np.eye(3) + skew) @ np.diag(scale * rng.uniform(0.7, 1.4, size=3))
        if np.linalg.cond(matrix) <= max_condition and abs(np.linalg.det(matrix)) > 1.0:
            return Lattice(matrix)
    raise InvalidSpecError("triclinic sampling failed")  # pragma: no cover


def make_supercell(crystal: Crystal, factor: int) -> Crystal:
    """f x f x f replication: same infinite structure, f^3 times the atoms."""
    if factor < 1:
        raise InvalidSpecError("supercell factor must be >= 1")
    offsets = np.array(list(itertools.product(range(factor), repeat=3)))
    shifts = offsets @ crystal.lattice.matrix
    positions = (crystal.positions[None, :, :] + shifts[:, None, :]).reshape(-1, 3)
    species = np.tile(crystal.species, len(offsets))
    return Crystal(
        lattice=Lattice(float(factor) * crystal.lattice.matrix),
        positions=positions,
        species=species,
    )


def random_crystal(seed: int, n_atoms: int, family: str = "triclinic") -> Crystal:
    """Convenience wrapper used by verification batches."""
    return generate(FixtureSpec(family=family, n_atoms=n_atoms, seed=seed))
