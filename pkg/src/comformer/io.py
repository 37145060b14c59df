"""Parsers and writers for crystal structures and serialized graphs.

Formats:

* VASP POSCAR (VASP-5 style with a species-symbol line); scale line may be
  negative, meaning the absolute value is the target cell volume.
* Crystal JSON: ``{"lattice", "cart_positions", "atomic_numbers", "comment"}``.
* Graph JSON: ``{"kind", "atomic_numbers", "lattice_repr", "edges"}`` with per
  edge ``{"src", "dst", "image", "dist", "angles" | "vec"}``.

Parsers accept ``str`` or UTF-8 ``bytes`` and raise only typed
:class:`~comformer.errors.ParseError` subclasses, never arbitrary exceptions,
regardless of input bytes. Emitted text uses LF line endings and shortest
round-trip float formatting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import graph as graphmod
from .elements import symbol_to_z, z_to_symbol
from .errors import (
    CountMismatchError,
    KindMismatchError,
    MalformedHeaderError,
    ParseError,
    SchemaViolationError,
    SingularLatticeError,
)
from .geometry import Crystal, Lattice
from .graph import CrystalGraph
from .latticerepr import LatticeRepresentation


@dataclass(frozen=True)
class StructureDocument:
    crystal: Crystal
    comment: str = ""
    source_path: Optional[str] = None


def _as_text(data) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedHeaderError(f"input is not UTF-8 text: {exc}") from None
    return data


def _float(token: str, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MalformedHeaderError(f"cannot parse {what}: {token!r}") from None
    if not math.isfinite(value):
        raise MalformedHeaderError(f"{what} must be finite, got {token!r}")
    return value


def _int(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedHeaderError(f"cannot parse {what}: {token!r}") from None


# ---------------------------------------------------------------------------
# POSCAR
# ---------------------------------------------------------------------------

def parse_poscar(text, source_path: Optional[str] = None) -> StructureDocument:
    """Parse a VASP POSCAR / CONTCAR document."""
    text = _as_text(text)
    lines = text.splitlines()
    if len(lines) < 8:
        raise MalformedHeaderError(
            f"POSCAR needs at least 8 lines, got {len(lines)}"
        )
    comment = lines[0].strip()

    scale_tokens = lines[1].split()
    if len(scale_tokens) != 1:
        raise MalformedHeaderError(
            f"scale line must hold exactly one number, got {lines[1]!r}"
        )
    scale = _float(scale_tokens[0], "scale factor")
    if scale == 0.0:
        raise MalformedHeaderError("scale factor must be nonzero")

    rows = []
    for ln in lines[2:5]:
        toks = ln.split()
        if len(toks) < 3:
            raise MalformedHeaderError(f"lattice row {ln!r} needs 3 numbers")
        rows.append([_float(t, "lattice component") for t in toks[:3]])
    matrix = np.array(rows)

    if scale > 0:
        factor = scale
    else:
        det = abs(float(np.linalg.det(matrix)))
        if det <= 0.0:
            raise SingularLatticeError("cannot rescale a zero-volume cell")
        factor = (-scale / det) ** (1.0 / 3.0)
    matrix = matrix * factor

    try:
        lattice = Lattice(matrix)
    except SingularLatticeError:
        raise
    except ValueError as exc:
        raise MalformedHeaderError(str(exc)) from None

    idx = 5
    symbol_tokens = lines[idx].split()
    if not symbol_tokens:
        raise MalformedHeaderError("missing species line")
    if symbol_tokens[0].lstrip("+-").isdigit():
        raise MalformedHeaderError(
            "counts line without species symbols (VASP-4 style) is not supported"
        )
    symbols = symbol_tokens
    idx += 1
    if idx >= len(lines):
        raise MalformedHeaderError("missing counts line")
    count_tokens = lines[idx].split()
    if len(count_tokens) != len(symbols):
        raise CountMismatchError(
            f"{len(symbols)} species symbols but {len(count_tokens)} counts"
        )
    counts = [_int(t, "species count") for t in count_tokens]
    if any(c < 1 for c in counts):
        raise CountMismatchError("species counts must be positive")
    species = []
    for sym, cnt in zip(symbols, counts):
        species.extend([symbol_to_z(sym)] * cnt)
    idx += 1

    if idx >= len(lines):
        raise MalformedHeaderError("missing coordinate mode line")
    mode_line = lines[idx].strip()
    if mode_line[:1] in ("s", "S"):  # Selective dynamics
        idx += 1
        if idx >= len(lines):
            raise MalformedHeaderError("missing coordinate mode line")
        mode_line = lines[idx].strip()
    first = mode_line[:1].lower()
    if first == "d":
        cartesian = False
    elif first in ("c", "k"):
        cartesian = True
    else:
        raise MalformedHeaderError(f"unknown coordinate mode {mode_line!r}")
    idx += 1

    n = len(species)
    coords = []
    for row in range(n):
        if idx + row >= len(lines):
            raise CountMismatchError(
                f"counts promise {n} atoms but only {row} coordinate lines found"
            )
        toks = lines[idx + row].split()
        if len(toks) < 3:
            raise CountMismatchError(
                f"coordinate line {row + 1} has {len(toks)} fields, need 3"
            )
        coords.append([_float(t, "coordinate") for t in toks[:3]])
    coords = np.array(coords)

    positions = coords * factor if cartesian else coords @ lattice.matrix
    try:
        crystal = Crystal(lattice=lattice, positions=positions, species=species)
    except ValueError as exc:
        raise MalformedHeaderError(str(exc)) from None
    return StructureDocument(crystal=crystal, comment=comment, source_path=source_path)


def write_poscar(doc: StructureDocument) -> str:
    """Emit a VASP-5 POSCAR (Direct mode, 16 significant digits).

    Consecutive runs of equal species become one symbol/count pair, so the
    atom order of the document is preserved exactly.
    """
    crystal = doc.crystal
    out = [doc.comment, "1.0"]
    for row in crystal.lattice.matrix:
        out.append(" ".join(f"{x:.16g}" for x in row))

    runs = []
    for z in crystal.species:
        if runs and runs[-1][0] == z:
            runs[-1][1] += 1
        else:
            runs.append([int(z), 1])
    out.append(" ".join(z_to_symbol(z) for z, _ in runs))
    out.append(" ".join(str(c) for _, c in runs))
    out.append("Direct")
    frac = crystal.frac_positions
    for row in frac:
        out.append(" ".join(f"{x:.16g}" for x in row))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# crystal JSON
# ---------------------------------------------------------------------------

def _load_json(text):
    text = _as_text(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolationError(f"invalid JSON: {exc}") from None


def _num_matrix(obj, shape, what) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise SchemaViolationError(f"{what} must be a numeric array") from None
    if arr.shape != shape:
        raise SchemaViolationError(f"{what} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SchemaViolationError(f"{what} must be finite")
    return arr


def parse_crystal_json(text, source_path: Optional[str] = None) -> StructureDocument:
    data = _load_json(text)
    if not isinstance(data, dict):
        raise SchemaViolationError("top level must be an object")
    for key in ("lattice", "cart_positions", "atomic_numbers"):
        if key not in data:
            raise SchemaViolationError(f"missing key {key!r}")
    lattice_arr = _num_matrix(data["lattice"], (3, 3), "lattice")
    numbers = data["atomic_numbers"]
    if (
        not isinstance(numbers, list)
        or not numbers
        or not all(isinstance(z, int) and not isinstance(z, bool) for z in numbers)
    ):
        raise SchemaViolationError("atomic_numbers must be a non-empty list of ints")
    n = len(numbers)
    positions = _num_matrix(data["cart_positions"], (n, 3), "cart_positions")
    comment = data.get("comment", "")
    if not isinstance(comment, str):
        raise SchemaViolationError("comment must be a string")
    try:
        crystal = Crystal(
            lattice=Lattice(lattice_arr), positions=positions, species=numbers
        )
    except (ValueError, SingularLatticeError) as exc:
        raise SchemaViolationError(str(exc)) from None
    return StructureDocument(crystal=crystal, comment=comment, source_path=source_path)


def write_crystal_json(doc: StructureDocument) -> str:
    payload = {
        "lattice": [list(row) for row in doc.crystal.lattice.matrix],
        "cart_positions": [list(row) for row in doc.crystal.positions],
        "atomic_numbers": [int(z) for z in doc.crystal.species],
        "comment": doc.comment,
    }
    return json.dumps(payload, indent=1) + "\n"


# ---------------------------------------------------------------------------
# graph JSON
# ---------------------------------------------------------------------------

def write_graph_json(graph: CrystalGraph) -> str:
    edges = []
    for i in range(graph.n_edges):
        entry = {
            "src": int(graph.src[i]),
            "dst": int(graph.dst[i]),
            "image": [int(v) for v in graph.images[i]],
            "dist": float(graph.dists[i]),
        }
        if graph.kind == graphmod.INVARIANT:
            entry["angles"] = [float(a) for a in graph.angles[i]]
        else:
            entry["vec"] = [float(v) for v in graph.vecs[i]]
        edges.append(entry)
    payload = {
        "kind": graph.kind,
        "atomic_numbers": [int(z) for z in graph.atomic_numbers],
        "lattice_repr": {
            "e1": [float(v) for v in graph.lattice_repr.e1],
            "e2": [float(v) for v in graph.lattice_repr.e2],
            "e3": [float(v) for v in graph.lattice_repr.e3],
        },
        "edges": edges,
    }
    return json.dumps(payload) + "\n"


def parse_graph_json(text) -> CrystalGraph:
    data = _load_json(text)
    if not isinstance(data, dict):
        raise SchemaViolationError("top level must be an object")
    for key in ("kind", "atomic_numbers", "lattice_repr", "edges"):
        if key not in data:
            raise SchemaViolationError(f"missing key {key!r}")
    kind = data["kind"]
    if kind not in (graphmod.INVARIANT, graphmod.EQUIVARIANT):
        raise SchemaViolationError(f"unknown graph kind {kind!r}")
    numbers = data["atomic_numbers"]
    if (
        not isinstance(numbers, list)
        or not numbers
        or not all(isinstance(z, int) and not isinstance(z, bool) for z in numbers)
    ):
        raise SchemaViolationError("atomic_numbers must be a non-empty list of ints")
    n = len(numbers)

    repr_obj = data["lattice_repr"]
    if not isinstance(repr_obj, dict):
        raise SchemaViolationError("lattice_repr must be an object")
    basis = np.array(
        [
            _num_matrix(repr_obj.get(name), (3,), f"lattice_repr.{name}")
            for name in ("e1", "e2", "e3")
        ]
    )

    raw_edges = data["edges"]
    if not isinstance(raw_edges, list):
        raise SchemaViolationError("edges must be a list")
    feature_key = "angles" if kind == graphmod.INVARIANT else "vec"
    other_key = "vec" if kind == graphmod.INVARIANT else "angles"
    src = np.empty(len(raw_edges), dtype=np.int64)
    dst = np.empty(len(raw_edges), dtype=np.int64)
    images = np.empty((len(raw_edges), 3), dtype=np.int64)
    dists = np.empty(len(raw_edges))
    feats = np.empty((len(raw_edges), 3))
    for i, e in enumerate(raw_edges):
        if not isinstance(e, dict):
            raise SchemaViolationError(f"edge {i} must be an object")
        if other_key in e:
            raise KindMismatchError(
                f"edge {i} of a {kind} graph carries {other_key!r}"
            )
        for key in ("src", "dst", "image", "dist", feature_key):
            if key not in e:
                raise SchemaViolationError(f"edge {i} missing key {key!r}")
        if not isinstance(e["src"], int) or not isinstance(e["dst"], int):
            raise SchemaViolationError(f"edge {i} endpoints must be ints")
        if not 0 <= e["src"] < n or not 0 <= e["dst"] < n:
            raise SchemaViolationError(f"edge {i} endpoint out of range")
        src[i] = e["src"]
        dst[i] = e["dst"]
        image = e["image"]
        if (
            not isinstance(image, list)
            or len(image) != 3
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in image)
        ):
            raise SchemaViolationError(f"edge {i} image must be three ints")
        images[i] = image
        if not isinstance(e["dist"], (int, float)) or not math.isfinite(e["dist"]):
            raise SchemaViolationError(f"edge {i} dist must be a finite number")
        dists[i] = e["dist"]
        feats[i] = _num_matrix(e[feature_key], (3,), f"edge {i} {feature_key}")

    lattice_repr = LatticeRepresentation(
        vectors=basis, coeffs=np.zeros((3, 3), dtype=np.int64)
    )
    angles = feats if kind == graphmod.INVARIANT else None
    vecs = feats if kind == graphmod.EQUIVARIANT else None
    designated = graphmod.locate_designated_edges(
        kind, lattice_repr, src, dst, dists, angles, vecs, n
    )
    # recover the integer coefficients of the basis from node 0's self-edges
    if np.all(designated[0] >= 0):
        lattice_repr = LatticeRepresentation(
            vectors=basis, coeffs=images[designated[0]].copy()
        )

    ordinary = np.ones(len(raw_edges), dtype=bool)
    ordinary[designated[designated >= 0]] = False
    radius = np.zeros(n)
    for node in range(n):
        mask = ordinary & (dst == node)
        if np.any(mask):
            radius[node] = float(np.max(dists[mask]))

    return CrystalGraph(
        kind=kind,
        atomic_numbers=np.array(numbers, dtype=int),
        lattice_repr=lattice_repr,
        src=src,
        dst=dst,
        images=images,
        dists=dists,
        per_node_radius=radius,
        angles=angles,
        vecs=vecs,
        designated=designated,
    )


__all__ = [
    "StructureDocument",
    "parse_poscar",
    "write_poscar",
    "parse_crystal_json",
    "write_crystal_json",
    "parse_graph_json",
    "write_graph_json",
    "ParseError",
]
