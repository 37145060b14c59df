"""Lattice algebra, periodic-image arithmetic, and rigid alignment.

Conventions used throughout the package:

* the lattice matrix ``L`` is row-major: rows are the three periodic
  translation vectors in Angstrom;
* positions are Cartesian row vectors, so ``cart = frac @ L``;
* atom positions are stored Cartesian; the fractional view is derived.

All functions are pure and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ImproperRotationError,
    LengthMismatchError,
    SingularLatticeError,
    ZeroVectorError,
)

#: Cells with |det L| at or below this volume (A^3) are rejected as degenerate.
MIN_CELL_VOLUME = 1e-10


def _as_matrix(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.shape != (3, 3):
        raise SingularLatticeError(f"lattice must be 3x3, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Lattice:
    """Unit-cell lattice: rows of ``matrix`` are the periodic vectors (A)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        if not np.all(np.isfinite(m)):
            raise SingularLatticeError("lattice entries must be finite")
        if abs(np.linalg.det(m)) <= MIN_CELL_VOLUME:
            raise SingularLatticeError(
                f"|det L| = {abs(np.linalg.det(m)):.3e} A^3 is not 3-periodic"
            )
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def rows(self) -> np.ndarray:
        return self.matrix

    @property
    def volume(self) -> float:
        """Unsigned cell volume in A^3."""
        return abs(float(np.linalg.det(self.matrix)))

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)

    def plane_spacings(self) -> np.ndarray:
        """Distance between adjacent lattice planes along each cell axis.

        Any lattice vector with integer coefficient ``g`` along axis ``a``
        has length >= ``|g_a| * spacing[a]``; used to size exhaustive
        image-search boxes.
        """
        inv = self.inverse
        return 1.0 / np.linalg.norm(inv, axis=0)


@dataclass(frozen=True)
class Crystal:
    """Unit cell plus atom basis: ``M = (species, positions, lattice)``."""

    lattice: Lattice
    positions: np.ndarray  # (n, 3) Cartesian, A
    species: np.ndarray  # (n,) atomic numbers

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        spec = np.asarray(self.species, dtype=int)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"positions must be (n, 3), got {pos.shape}")
        if pos.shape[0] < 1:
            raise ValueError("crystal needs at least one atom")
        if spec.shape != (pos.shape[0],):
            raise ValueError("positions and species lengths differ")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if np.any(spec < 1) or np.any(spec > 118):
            raise ValueError("atomic numbers must lie in 1..118")
        pos = pos.copy()
        pos.flags.writeable = False
        spec = spec.copy()
        spec.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "species", spec)

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]

    @property
    def frac_positions(self) -> np.ndarray:
        return self.positions @ self.lattice.inverse


def frac_to_cart(lattice: Lattice, frac) -> np.ndarray:
    """Cartesian position of fractional coordinates: ``f1*l1 + f2*l2 + f3*l3``."""
    return np.asarray(frac, dtype=float) @ lattice.matrix


def cart_to_frac(lattice: Lattice, cart) -> np.ndarray:
    return np.asarray(cart, dtype=float) @ lattice.inverse


def wrap_to_cell(crystal: Crystal) -> Crystal:
    """Translate every atom by lattice vectors so fractional coords lie in [0, 1)."""
    frac = crystal.frac_positions
    wrapped = frac - np.floor(frac)
    # floor can round f = -1e-18 to -1, leaving wrapped == 1.0 exactly
    wrapped[wrapped >= 1.0] -= 1.0
    return replace(crystal, positions=wrapped @ crystal.lattice.matrix)


def angle_between(v1, v2) -> float:
    """Angle in [0, pi] between two vectors."""
    a = np.asarray(v1, dtype=float)
    b = np.asarray(v2, dtype=float)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na <= 1e-12 or nb <= 1e-12:
        raise ZeroVectorError("angle undefined for zero-length vector")
    cos = np.dot(a, b) / (na * nb)
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def angles_to_basis(vectors: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Angles of each row of ``vectors`` against each row of ``basis``.

    Vectorized companion of :func:`angle_between`; shapes (m, 3), (k, 3)
    -> (m, k).
    """
    vn = np.linalg.norm(vectors, axis=1, keepdims=True)
    bn = np.linalg.norm(basis, axis=1, keepdims=True)
    if np.any(vn <= 1e-12) or np.any(bn <= 1e-12):
        raise ZeroVectorError("angle undefined for zero-length vector")
    # same arithmetic order as angle_between: dot first, then normalize
    cos = (vectors @ basis.T) / (vn * bn.T)
    return np.arccos(np.clip(cos, -1.0, 1.0))


@dataclass(frozen=True)
class Alignment:
    rotation: np.ndarray  # (3, 3), det = +1
    translation: np.ndarray  # (3,)
    rmsd: float


def kabsch_align(x, y) -> Alignment:
    """Best proper-rigid superposition of point set ``x`` onto ``y``.

    Minimizes ``sqrt(mean ||R x_i + t - y_i||^2)`` over rotations with
    det(R) = +1 and translations. Reflections are never used, so a chiral
    mismatch shows up as nonzero RMSD instead of being silently erased.
    """
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    ys = np.atleast_2d(np.asarray(y, dtype=float))
    if xs.shape != ys.shape or xs.shape[1] != 3 or xs.shape[0] < 1:
        raise LengthMismatchError(f"point sets differ: {xs.shape} vs {ys.shape}")
    cx = xs.mean(axis=0)
    cy = ys.mean(axis=0)
    rot = rotation_between(xs - cx, ys - cy)
    t = cy - cx @ rot.T
    delta = (xs @ rot.T + t) - ys
    rmsd = float(np.sqrt(np.mean(np.sum(delta * delta, axis=1))))
    return Alignment(rotation=rot, translation=t, rmsd=rmsd)


def rotation_between(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Proper rotation R minimizing ``sum ||R x_i - y_i||^2`` (no centering).

    SVD solution with the determinant sign forced to +1.
    """
    h = x.T @ y  # (3, 3) covariance
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0.0:
        d = 1.0
    s = np.diag([1.0, 1.0, d])
    return vt.T @ s @ u.T


def random_rotation(seed) -> np.ndarray:
    """Uniform random proper rotation via a normalized quaternion.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def require_proper_rotation(r: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ImproperRotationError(f"rotation must be 3x3, got {r.shape}")
    if not np.allclose(r @ r.T, np.eye(3), atol=tol) or np.linalg.det(r) < 0:
        raise ImproperRotationError("matrix is not a proper rotation")
    return r
