"""Geometrically complete crystal graphs and crystal transformers.

Builds SE(3)-invariant and SO(3)-equivariant crystal graphs from periodic
structures, reconstructs structures back from the graphs (an operational
completeness check), fuzzes crystal passive symmetries, and runs frozen
forward passes of the iComFormer / eComFormer architectures.
"""

from . import errors
from ._core import BACKEND as NEIGHBOR_BACKEND
from .geometry import (
    Crystal,
    Lattice,
    angle_between,
    cart_to_frac,
    frac_to_cart,
    kabsch_align,
    random_rotation,
    wrap_to_cell,
)
from .graph import (
    CrystalGraph,
    Edge,
    build_equivariant_graph,
    build_invariant_graph,
    compare_graphs,
    is_strongly_connected,
    periodic_knn,
)
from .io import (
    StructureDocument,
    parse_crystal_json,
    parse_graph_json,
    parse_poscar,
    write_crystal_json,
    write_graph_json,
    write_poscar,
)
from .latticerepr import (
    LatticeRepresentation,
    build_lattice_representation,
    enumerate_lattice_vectors,
)
from .model import (
    ECOMFORMER,
    ICOMFORMER,
    ModelConfig,
    ModelParameters,
    featurize,
    fit_readout_ridge,
    forward,
    init_parameters,
    two_hop_angle_check,
)
from .reconstruct import (
    ReconstructionReport,
    match_structures,
    reconstruct_crystal,
    reconstruct_crystal_equivariant,
)
from .symmetry import (
    apply_isometry,
    apply_unimodular,
    fuzz_invariance,
    mirror,
    shift_origin,
)

__version__ = "0.1.0"
