"""Crystal passive symmetries and invariance fuzzing.

A passive transform re-describes the same physical crystal: proper rotation
plus translation, cell-origin shift, or unimodular (det +1) change of the
cell basis. Reflection is deliberately not passive: it maps a structure to
its chiral image. ``fuzz_invariance`` drives randomized checks that the
graph fingerprint is blind to the passive transforms and, as a negative
control, can inject mirrors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import NonUnimodularError
from .geometry import (
    Crystal,
    Lattice,
    require_proper_rotation,
    random_rotation,
    wrap_to_cell,
)
from .graph import build_invariant_graph, graph_deviation

ROTATION = "rotation"
ORIGIN_SHIFT = "origin-shift"
UNIMODULAR = "unimodular"
MIRROR = "mirror"

PASSIVE_KINDS = (ROTATION, ORIGIN_SHIFT, UNIMODULAR)


@dataclass(frozen=True)
class TransformSpec:
    """One concrete transform: ``kind`` plus its payload."""

    kind: str
    rotation: Optional[np.ndarray] = None
    translation: Optional[np.ndarray] = None
    frac_shift: Optional[np.ndarray] = None
    unimodular: Optional[np.ndarray] = None
    mirror_normal: Optional[np.ndarray] = None


def apply_isometry(crystal: Crystal, rotation, translation) -> Crystal:
    """Rotate the cell and positions together, then translate the positions."""
    r = require_proper_rotation(rotation)
    b = np.asarray(translation, dtype=float)
    return Crystal(
        lattice=Lattice(crystal.lattice.matrix @ r.T),
        positions=crystal.positions @ r.T + b,
        species=crystal.species,
    )


def shift_origin(crystal: Crystal, frac_shift) -> Crystal:
    """Shift the cell origin: add ``t @ L`` to all positions and rewrap."""
    t = np.asarray(frac_shift, dtype=float) @ crystal.lattice.matrix
    return wrap_to_cell(replace(crystal, positions=crystal.positions + t))


def apply_unimodular(crystal: Crystal, u) -> Crystal:
    """Re-describe the cell with basis ``U @ L`` (integer U, det +1)."""
    u = np.asarray(u)
    if u.shape != (3, 3) or not np.issubdtype(u.dtype, np.integer):
        raise NonUnimodularError("U must be an integer 3x3 matrix")
    if round(float(np.linalg.det(u))) != 1:
        raise NonUnimodularError(f"det U must be +1, got {np.linalg.det(u):g}")
    return wrap_to_cell(
        Crystal(
            lattice=Lattice(u.astype(float) @ crystal.lattice.matrix),
            positions=crystal.positions,
            species=crystal.species,
        )
    )


def mirror(crystal: Crystal, plane_normal) -> Crystal:
    """Householder reflection of positions and cell through a plane."""
    n = np.asarray(plane_normal, dtype=float)
    n = n / np.linalg.norm(n)
    h = np.eye(3) - 2.0 * np.outer(n, n)
    return Crystal(
        lattice=Lattice(crystal.lattice.matrix @ h),
        positions=crystal.positions @ h,
        species=crystal.species,
    )


def random_unimodular(rng, max_entry: int = 2, n_ops: int = 6) -> np.ndarray:
    """Random integer matrix with det exactly +1 and entries in [-max, max].

    Built from elementary row additions (det preserving); operations that
    would push an entry out of range are skipped.
    """
    u = np.eye(3, dtype=np.int64)
    for _ in range(n_ops):
        i, j = rng.choice(3, size=2, replace=False)
        s = int(rng.choice([-1, 1]))
        candidate = u.copy()
        candidate[i] += s * candidate[j]
        if np.max(np.abs(candidate)) <= max_entry:
            u = candidate
    return u


def random_transform(kind: str, rng) -> TransformSpec:
    if kind == ROTATION:
        return TransformSpec(
            kind=kind,
            rotation=random_rotation(rng),
            translation=rng.uniform(-5.0, 5.0, size=3),
        )
    if kind == ORIGIN_SHIFT:
        return TransformSpec(kind=kind, frac_shift=rng.uniform(0.0, 1.0, size=3))
    if kind == UNIMODULAR:
        return TransformSpec(kind=kind, unimodular=random_unimodular(rng))
    if kind == MIRROR:
        normal = rng.normal(size=3)
        return TransformSpec(kind=kind, mirror_normal=normal / np.linalg.norm(normal))
    raise ValueError(f"unknown transform kind {kind!r}")


def apply_transform(crystal: Crystal, spec: TransformSpec) -> Crystal:
    if spec.kind == ROTATION:
        return apply_isometry(crystal, spec.rotation, spec.translation)
    if spec.kind == ORIGIN_SHIFT:
        return shift_origin(crystal, spec.frac_shift)
    if spec.kind == UNIMODULAR:
        return apply_unimodular(crystal, spec.unimodular)
    if spec.kind == MIRROR:
        return mirror(crystal, spec.mirror_normal)
    raise ValueError(f"unknown transform kind {spec.kind!r}")


@dataclass(frozen=True)
class FuzzReport:
    passed: int
    failed: int
    worst_deviation: float
    per_kind: dict

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failed": self.failed,
            "worst_deviation": self.worst_deviation,
            "per_kind": self.per_kind,
        }


def fuzz_invariance(
    crystal: Crystal,
    k: int,
    trials: int,
    seed: int,
    tol: float = 1e-9,
    include_mirror: bool = False,
) -> FuzzReport:
    """Fingerprint stability under ``trials`` random transforms per kind.

    Mirrors are only applied when ``include_mirror`` is set (negative
    control); they are not passive symmetries and are expected to change the
    fingerprint of chiral structures.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    base = build_invariant_graph(crystal, k)
    kinds = PASSIVE_KINDS + ((MIRROR,) if include_mirror else ())

    passed = failed = 0
    worst = 0.0
    per_kind = {kind: {"passed": 0, "failed": 0, "worst_deviation": 0.0} for kind in kinds}
    for kind in kinds:
        for _ in range(trials):
            spec = random_transform(kind, rng)
            transformed = apply_transform(crystal, spec)
            deviation = graph_deviation(base, build_invariant_graph(transformed, k))
            stats = per_kind[kind]
            if deviation <= tol:
                passed += 1
                stats["passed"] += 1
            else:
                failed += 1
                stats["failed"] += 1
            bounded = float(min(deviation, np.inf))
            stats["worst_deviation"] = max(stats["worst_deviation"], bounded)
            worst = max(worst, bounded)
    return FuzzReport(passed=passed, failed=failed, worst_deviation=worst, per_kind=per_kind)


# ---------------------------------------------------------------------------
# brute-force isometry oracle
# ---------------------------------------------------------------------------

def _short_basis(lattice: Lattice) -> np.ndarray:
    """Greedy shortest independent lattice vectors (a basis in 3D).

    Self-contained enumeration so the chirality oracle does not depend on
    the graph-construction code it is meant to check.
    """
    rng_box = range(-2, 3)
    coeffs = np.array([c for c in itertools.product(rng_box, rng_box, rng_box) if any(c)])
    vecs = coeffs @ lattice.matrix
    vecs = vecs[np.argsort(np.linalg.norm(vecs, axis=1), kind="stable")]
    basis = [vecs[0]]
    for v in vecs[1:]:
        trial = basis + [v]
        if len(trial) == 2:
            if np.linalg.norm(np.cross(trial[0], v)) > 1e-8:
                basis.append(v)
        else:
            if abs(np.linalg.det(np.array(trial))) > 1e-8:
                basis.append(v)
                break
    if len(basis) != 3:  # pragma: no cover
        raise ValueError("degenerate lattice in isometry search")
    return np.array(basis)


def brute_force_isometric(a: Crystal, b: Crystal, tol: float = 1e-5) -> bool:
    """Whether some proper rotation + translation maps crystal a onto b.

    Candidate rotations are built by mapping a short basis of a's lattice to
    every congruent triple of short b-lattice vectors; each candidate is
    then verified atom by atom modulo b's cell.
    """
    if a.n_atoms != b.n_atoms or not np.array_equal(
        np.sort(a.species), np.sort(b.species)
    ):
        return False
    t_basis = _short_basis(a.lattice)
    t_len = np.linalg.norm(t_basis, axis=1)

    rng_box = range(-2, 3)
    coeffs = np.array([c for c in itertools.product(rng_box, rng_box, rng_box) if any(c)])
    b_vecs = coeffs @ b.lattice.matrix
    b_len = np.linalg.norm(b_vecs, axis=1)

    cand = [b_vecs[np.abs(b_len - L) <= tol * max(1.0, L)] for L in t_len]
    gram_t = t_basis @ t_basis.T

    b_inv = b.lattice.inverse
    b_frac = b.positions @ b_inv

    for u1 in cand[0]:
        for u2 in cand[1]:
            for u3 in cand[2]:
                u = np.array([u1, u2, u3])
                if np.max(np.abs(u @ u.T - gram_t)) > 1e-6:
                    continue
                rot_t = np.linalg.solve(t_basis, u)  # t_basis @ rot_t = u
                if abs(np.linalg.det(rot_t) - 1.0) > 1e-6:
                    continue
                if np.max(np.abs(rot_t @ rot_t.T - np.eye(3))) > 1e-6:
                    continue
                moved = a.positions @ rot_t
                for j0 in range(b.n_atoms):
                    if b.species[j0] != a.species[0]:
                        continue
                    shift = b.positions[j0] - moved[0]
                    shifted_frac = (moved + shift) @ b_inv
                    if _atoms_match(shifted_frac, a.species, b_frac, b.species, b.lattice, tol):
                        return True
    return False


def _atoms_match(frac_a, species_a, frac_b, species_b, lattice_b: Lattice, tol: float) -> bool:
    used = np.zeros(len(frac_b), dtype=bool)
    for i in range(len(frac_a)):
        diff = frac_b - frac_a[i]
        diff -= np.rint(diff)
        dist = np.linalg.norm(diff @ lattice_b.matrix, axis=1)
        ok = (dist <= tol) & (species_b == species_a[i]) & ~used
        hit = np.nonzero(ok)[0]
        if not len(hit):
            return False
        used[hit[0]] = True
    return True
