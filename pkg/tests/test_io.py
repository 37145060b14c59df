import json
from pathlib import Path

import numpy as np
import pytest

from comformer.errors import (
    CountMismatchError,
    KindMismatchError,
    MalformedHeaderError,
    ParseError,
    SchemaViolationError,
    UnknownSpeciesError,
)
from comformer.fixtures import FixtureSpec, generate
from comformer.geometry import Crystal, Lattice
from comformer.graph import build_equivariant_graph, build_invariant_graph
from comformer.io import (
    StructureDocument,
    parse_crystal_json,
    parse_graph_json,
    parse_poscar,
    write_crystal_json,
    write_graph_json,
    write_poscar,
)

DATA = Path(__file__).parent / "data"

NACL_POSCAR = """rocksalt conventional cell
1.0
5.64 0.0 0.0
0.0 5.64 0.0
0.0 0.0 5.64
Na Cl
4 4
Direct
0.0 0.0 0.0
0.5 0.5 0.0
0.5 0.0 0.5
0.0 0.5 0.5
0.5 0.0 0.0
0.0 0.5 0.0
0.0 0.0 0.5
0.5 0.5 0.5
"""


class TestParsePoscar:
    def test_nacl(self):
        doc = parse_poscar(NACL_POSCAR)
        assert doc.crystal.n_atoms == 8
        assert list(doc.crystal.species) == [11] * 4 + [17] * 4
        assert np.allclose(doc.crystal.lattice.matrix, np.diag([5.64] * 3))
        assert doc.comment == "rocksalt conventional cell"
        back = parse_poscar(write_poscar(doc))
        assert np.allclose(back.crystal.positions, doc.crystal.positions, atol=1e-9)

    def test_negative_scale_sets_volume(self):
        text = "cube\n-10.0\n1 0 0\n0 1 0\n0 0 1\nPo\n1\nDirect\n0 0 0\n"
        doc = parse_poscar(text)
        assert doc.crystal.lattice.volume == pytest.approx(10.0, rel=1e-12)

    def test_count_mismatch(self):
        text = "x\n1.0\n4 0 0\n0 4 0\n0 0 4\nC O\n2 3\nDirect\n" + "0 0 0\n0.2 0 0\n0.4 0 0\n0.6 0 0\n"
        with pytest.raises(CountMismatchError):
            parse_poscar(text)

    def test_cartesian_and_selective_dynamics(self):
        text = (
            "x\n2.0\n2 0 0\n0 2 0\n0 0 2\nSi\n2\nSelective dynamics\nCartesian\n"
            "0 0 0 T T T\n1 1 1 F F F\n"
        )
        doc = parse_poscar(text)
        # cartesian coordinates are multiplied by the scale
        assert np.allclose(doc.crystal.positions[1], [2, 2, 2])
        assert np.allclose(doc.crystal.lattice.matrix, np.diag([4.0] * 3))

    def test_crlf_and_case(self):
        text = NACL_POSCAR.replace("\n", "\r\n").replace("Direct", "direct")
        assert parse_poscar(text).crystal.n_atoms == 8

    def test_vasp4_rejected(self):
        text = "x\n1.0\n4 0 0\n0 4 0\n0 0 4\n2\nDirect\n0 0 0\n0.5 0.5 0.5\n"
        with pytest.raises(MalformedHeaderError):
            parse_poscar(text)

    def test_unknown_species(self):
        text = "x\n1.0\n4 0 0\n0 4 0\n0 0 4\nQq\n1\nDirect\n0 0 0\n"
        with pytest.raises(UnknownSpeciesError):
            parse_poscar(text)

    def test_bytes_accepted(self):
        assert parse_poscar(NACL_POSCAR.encode()).crystal.n_atoms == 8


class TestWritePoscar:
    def test_po_golden(self):
        po = generate(FixtureSpec(family="cubic", n_atoms=1))
        text = write_poscar(StructureDocument(crystal=po, comment="Po simple cubic"))
        assert text == (
            "Po simple cubic\n1.0\n"
            "3.35 0 0\n0 3.35 0\n0 0 3.35\n"
            "Po\n1\nDirect\n0 0 0\n"
        )

    def test_empty_comment(self):
        po = generate(FixtureSpec(family="cubic", n_atoms=1))
        text = write_poscar(StructureDocument(crystal=po))
        assert text.startswith("\n1.0\n")
        assert parse_poscar(text).comment == ""

    def test_interleaved_species_preserved(self):
        crystal = Crystal(
            lattice=Lattice(np.diag([4.0, 5.0, 6.0])),
            positions=[[0, 0, 0], [2, 0, 0], [0, 2.5, 0]],
            species=[11, 17, 11],
        )
        doc = parse_poscar(write_poscar(StructureDocument(crystal=crystal)))
        assert list(doc.crystal.species) == [11, 17, 11]
        assert np.allclose(doc.crystal.positions, crystal.positions, atol=1e-9)


class TestCrystalJson:
    def test_roundtrip_exact(self):
        crystal = generate(FixtureSpec(family="triclinic", n_atoms=5, seed=3))
        doc = StructureDocument(crystal=crystal, comment="x")
        back = parse_crystal_json(write_crystal_json(doc))
        assert np.array_equal(back.crystal.positions, crystal.positions)
        assert np.array_equal(back.crystal.lattice.matrix, crystal.lattice.matrix)
        assert back.comment == "x"

    def test_missing_lattice(self):
        with pytest.raises(SchemaViolationError):
            parse_crystal_json('{"cart_positions": [[0,0,0]], "atomic_numbers": [6]}')

    def test_empty_crystal_rejected(self):
        payload = {"lattice": np.eye(3).tolist(), "cart_positions": [], "atomic_numbers": []}
        with pytest.raises(SchemaViolationError):
            parse_crystal_json(json.dumps(payload))


class TestGraphJson:
    def test_roundtrip_cubic(self):
        po = generate(FixtureSpec(family="cubic", n_atoms=1))
        graph = build_invariant_graph(po, 6)
        back = parse_graph_json(write_graph_json(graph))
        assert back.kind == graph.kind
        assert np.array_equal(back.src, graph.src)
        assert np.array_equal(back.images, graph.images)
        assert np.array_equal(back.dists, graph.dists)
        assert np.array_equal(back.angles, graph.angles)
        assert np.array_equal(back.lattice_repr.vectors, graph.lattice_repr.vectors)
        # recovered designated edges may point at coinciding kNN duplicates;
        # the referenced features must be identical
        for m in range(3):
            a, b = graph.designated[0, m], back.designated[0, m]
            assert np.array_equal(graph.images[a], back.images[b])
            assert graph.dists[a] == back.dists[b]
            assert np.array_equal(graph.angles[a], back.angles[b])

    def test_roundtrip_equivariant(self):
        crystal = generate(FixtureSpec(family="triclinic", n_atoms=4, seed=7))
        graph = build_equivariant_graph(crystal, 6)
        back = parse_graph_json(write_graph_json(graph))
        assert np.array_equal(back.vecs, graph.vecs)
        assert np.array_equal(back.lattice_repr.coeffs, graph.lattice_repr.coeffs)

    def test_kind_mismatch(self):
        text = json.dumps(
            {
                "kind": "invariant",
                "atomic_numbers": [6],
                "lattice_repr": {"e1": [1, 0, 0], "e2": [0, 1, 0], "e3": [0, 0, 1]},
                "edges": [
                    {"src": 0, "dst": 0, "image": [1, 0, 0], "dist": 1.0, "vec": [1, 0, 0]}
                ],
            }
        )
        with pytest.raises(KindMismatchError):
            parse_graph_json(text)

    def test_golden_diag235(self):
        crystal = Crystal(
            lattice=Lattice(np.diag([2.0, 3.0, 5.0])), positions=np.zeros((1, 3)), species=[84]
        )
        graph = build_invariant_graph(crystal, 6)
        assert write_graph_json(graph) == (DATA / "diag235.graph.json").read_text()


class TestFuzzRobustness:
    @pytest.mark.parametrize("parser", [parse_poscar, parse_crystal_json, parse_graph_json])
    def test_random_bytes_raise_typed_errors(self, parser):
        rng = np.random.default_rng(0)
        for _ in range(800):
            blob = rng.integers(0, 256, size=rng.integers(0, 300)).astype(np.uint8).tobytes()
            try:
                parser(blob)
            except ParseError:
                pass

    def test_structured_mutations(self):
        rng = np.random.default_rng(1)
        base = NACL_POSCAR
        for _ in range(400):
            chars = list(base)
            for _ in range(rng.integers(1, 6)):
                chars[rng.integers(0, len(chars))] = chr(rng.integers(32, 127))
            try:
                parse_poscar("".join(chars))
            except ParseError:
                pass
