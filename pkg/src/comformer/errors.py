"""Exception hierarchy.

Every documented failure mode raises a typed error from this module; callers
can catch :class:`ComformerError` for anything the library itself diagnoses.
"""


class ComformerError(Exception):
    """Base class for all library errors."""


# geometry ------------------------------------------------------------------

class SingularLatticeError(ComformerError):
    """Lattice matrix is singular or below the volume threshold."""


class ZeroVectorError(ComformerError):
    """An angle was requested for a (near-)zero vector."""


class LengthMismatchError(ComformerError):
    """Point sets of different sizes were passed to an alignment routine."""


class ImproperRotationError(ComformerError):
    """A matrix expected to be a proper rotation is not."""


# structure / graph file formats -------------------------------------------

class ParseError(ComformerError):
    """Base class for file-format failures."""


class MalformedHeaderError(ParseError):
    pass


class UnknownSpeciesError(ParseError):
    pass


class CountMismatchError(ParseError):
    pass


class SchemaViolationError(ParseError):
    pass


# lattice representation / graph construction --------------------------------

class DegenerateLatticeError(ComformerError):
    """No valid lattice representation exists (coplanar / collinear rows)."""


class InvalidKError(ComformerError):
    """Neighbor count k must be >= 1."""


class DisconnectedError(ComformerError):
    """Graph is not connected; increase k to enlarge the neighborhoods."""


class KindMismatchError(ComformerError):
    """Invariant/equivariant graph kinds were mixed."""


class MissingSelfEdgesError(ComformerError):
    """A node lacks its three designated lattice self-edges."""


# reconstruction --------------------------------------------------------------

class SingularBasisError(ComformerError):
    """Reconstruction basis is numerically coplanar."""


class LeftHandedSolutionError(ComformerError):
    """Recovered basis is left-handed; the input graph is corrupt."""


class InconsistentPlacementError(ComformerError):
    """Redundant edges disagree about an atom position; graph not realizable."""


class SpeciesMismatchError(ComformerError):
    """Structures passed to the matcher differ in size or species."""


# symmetry transforms ---------------------------------------------------------

class NonUnimodularError(ComformerError):
    """Integer cell transform must have determinant +1."""


# model ----------------------------------------------------------------------

class ModelError(ComformerError):
    """Base class for forward-pass failures."""


class NonpositiveDistanceError(ModelError):
    pass


class ShapeMismatchError(ModelError):
    pass


class OrderMismatchError(ModelError):
    """Rotation orders of tensor-product arguments disagree."""


class WrongGraphKindError(ModelError):
    """Model variant and graph kind do not match."""


class NotUnitError(ModelError):
    """Spherical harmonics require unit-length directions."""


class NonfiniteInputError(ModelError):
    pass


# fixtures ---------------------------------------------------------------------

class InvalidSpecError(ComformerError):
    """Fixture specification is out of the supported range."""
