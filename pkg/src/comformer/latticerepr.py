"""Periodic-invariant, handedness-aware lattice representation.

For a lattice L the representation is a triple of short periodic vectors
(e1, e2, e3) selected purely from geometry:

1. e1: shortest nonzero lattice vector;
2. e2: next shortest not collinear with e1, negated if its angle to e1
   exceeds 90 degrees;
3. e3: next shortest not coplanar with {e1, e2}, negated if its angle to e1
   exceeds 90 degrees;
4. finally all three are negated together if they form a left-handed system.

Equal-length candidates are ordered deterministically by their integer
coefficients (descending lexicographic), which is stable under rotation of
the lattice; inputs where such ties (or 90-degree flip boundaries) occur are
flagged ``tie_degenerate`` because no deterministic rule can also be stable
under re-description of the cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLatticeError
from .geometry import Lattice

#: collinearity / coplanarity thresholds on unit vectors (scale-free)
COLLINEAR_TOL = 1e-8
COPLANAR_TOL = 1e-8
#: negate a candidate only when cos(angle to e1) is decisively negative,
#: i.e. angle > 90 degrees by more than ~1e-12 rad; exact 90 is kept as-is
FLIP_COS_TOL = 1e-12
#: relative length window treated as "equal length" for tie ordering/flagging
TIE_REL_TOL = 1e-9


def _tie_key(coeff: np.ndarray):
    # descending lexicographic on (k1, k2, k3); puts the positive-leading
    # member of a +/- pair first and matches the documented ordering
    return (-coeff[0], -coeff[1], -coeff[2])


def _enumerate_sorted(lattice: Lattice, count: int):
    """At least ``count`` shortest nonzero lattice vectors, fully sorted.

    The integer search box is grown until its guaranteed-exhaustive radius
    covers the ``count``-th shortest length, so no shorter vector can be
    missed. Returns (vectors (m,3), coeffs (m,3), lengths (m,)) with
    m >= count, sorted by (length group, tie key).
    """
    spacings = lattice.plane_spacings()
    r = float(np.max(spacings))
    for _ in range(64):
        bounds = np.ceil(r / spacings).astype(int)
        if float(np.prod((2 * bounds + 1).astype(float))) > 2_000_000:
            raise DegenerateLatticeError(
                "image search box exploded; cell is numerically degenerate"
            )
        axes = [np.arange(-b, b + 1) for b in bounds]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        grid = grid[np.any(grid != 0, axis=1)]
        vecs = grid @ lattice.matrix
        lengths = np.linalg.norm(vecs, axis=1)
        # exhaustive for every length <= r; keep only those
        inside = lengths <= r
        if int(inside.sum()) >= count:
            grid, vecs, lengths = grid[inside], vecs[inside], lengths[inside]
            break
        r *= 1.6
    else:  # pragma: no cover - growth is geometric, cannot run this long
        raise DegenerateLatticeError("lattice vector enumeration did not converge")

    order = np.argsort(lengths, kind="stable")
    grid, vecs, lengths = grid[order], vecs[order], lengths[order]

    # deterministic ordering inside equal-length groups (rotation-stable)
    out = []
    i = 0
    m = len(lengths)
    while i < m:
        j = i + 1
        tol = max(TIE_REL_TOL * lengths[i], 1e-12)
        while j < m and lengths[j] - lengths[i] <= tol:
            j += 1
        group = sorted(range(i, j), key=lambda idx: _tie_key(grid[idx]))
        out.extend(group)
        i = j
    idx = np.array(out)
    return vecs[idx], grid[idx], lengths[idx]


def enumerate_lattice_vectors(lattice: Lattice, count: int):
    """The ``count`` shortest nonzero lattice vectors with their coefficients.

    Ordered by length, ties broken by descending lexicographic integer
    coefficients. Returns a list of (vector (3,), coeff (3,) int) pairs.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    vecs, coeffs, _ = _enumerate_sorted(lattice, count)
    return [(vecs[i].copy(), coeffs[i].copy()) for i in range(count)]


@dataclass(frozen=True)
class LatticeRepresentation:
    """The selected triple: rows of ``vectors`` are e1, e2, e3 (A); rows of
    ``coeffs`` are their integer coordinates in the input lattice basis."""

    vectors: np.ndarray  # (3, 3) float
    coeffs: np.ndarray  # (3, 3) int
    tie_degenerate: bool = False

    @property
    def e1(self) -> np.ndarray:
        return self.vectors[0]

    @property
    def e2(self) -> np.ndarray:
        return self.vectors[1]

    @property
    def e3(self) -> np.ndarray:
        return self.vectors[2]

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)


def _near_length(lengths: np.ndarray, value: float) -> np.ndarray:
    return np.abs(lengths - value) <= max(TIE_REL_TOL * value, 1e-12)


def build_lattice_representation(lattice: Lattice) -> LatticeRepresentation:
    """Construct the lattice representation for every atom of a crystal.

    The triple is shared by all nodes since all atoms repeat with the same
    periodic pattern.
    """
    need = 16
    while True:
        vecs, coeffs, lengths = _enumerate_sorted(lattice, need)
        result = _select(vecs, coeffs, lengths)
        if result is not None:
            break
        if need > 4096:
            raise DegenerateLatticeError(
                "no non-coplanar lattice vector triple found; cell is degenerate"
            )
        need *= 4

    e_vecs, e_coeffs, tie = result
    det = float(np.linalg.det(e_vecs))
    if det < 0:
        e_vecs = -e_vecs
        e_coeffs = -e_coeffs
        det = -det

    if not np.isclose(det, lattice.volume, rtol=1e-9, atol=1e-12):
        raise DegenerateLatticeError(
            f"selected triple spans volume {det:g} != cell volume {lattice.volume:g}"
        )
    e_vecs = e_vecs.copy()
    e_vecs.flags.writeable = False
    e_coeffs = e_coeffs.copy()
    e_coeffs.flags.writeable = False
    return LatticeRepresentation(vectors=e_vecs, coeffs=e_coeffs, tie_degenerate=tie)


def _select(vecs, coeffs, lengths):
    """Apply the selection and flip rules to a sorted candidate list.

    Returns (vectors, coeffs, tie_flag) or None when the list is too short
    to contain a non-coplanar third vector.
    """
    m = len(lengths)
    tie = False

    e1, c1 = vecs[0], coeffs[0]
    u1 = e1 / lengths[0]
    same_line_e1 = np.linalg.norm(np.cross(vecs / lengths[:, None], u1), axis=1) <= COLLINEAR_TOL
    if np.any(_near_length(lengths, lengths[0]) & ~same_line_e1):
        tie = True

    i2 = None
    for i in range(1, m):
        if not same_line_e1[i]:
            i2 = i
            break
    if i2 is None:
        return None
    e2, c2 = vecs[i2].copy(), coeffs[i2].copy()
    cos12 = float(np.dot(e2, e1) / (lengths[i2] * lengths[0]))
    if cos12 < -FLIP_COS_TOL:
        e2, c2 = -e2, -c2
    if abs(cos12) <= TIE_REL_TOL:
        tie = True  # flip boundary: sign of e2 not robust under re-description
    competitors2 = _near_length(lengths, lengths[i2]) & ~same_line_e1
    same_line_e2 = (
        np.linalg.norm(np.cross(vecs / lengths[:, None], e2 / lengths[i2]), axis=1)
        <= COLLINEAR_TOL
    )
    if np.any(competitors2 & ~same_line_e2):
        tie = True

    normal = np.cross(u1, e2 / lengths[i2])
    normal /= np.linalg.norm(normal)
    coplanar = np.abs((vecs / lengths[:, None]) @ normal) <= COPLANAR_TOL
    i3 = None
    for i in range(1, m):
        if not coplanar[i]:
            i3 = i
            break
    if i3 is None:
        return None
    e3, c3 = vecs[i3].copy(), coeffs[i3].copy()
    cos13 = float(np.dot(e3, e1) / (lengths[i3] * lengths[0]))
    if cos13 < -FLIP_COS_TOL:
        e3, c3 = -e3, -c3
    if abs(cos13) <= TIE_REL_TOL:
        tie = True
    same_line_e3 = (
        np.linalg.norm(np.cross(vecs / lengths[:, None], e3 / lengths[i3]), axis=1)
        <= COLLINEAR_TOL
    )
    if np.any(_near_length(lengths, lengths[i3]) & ~coplanar & ~same_line_e3):
        tie = True

    return np.array([e1, e2, e3]), np.array([c1, c2, c3]), tie
