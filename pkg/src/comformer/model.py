"""Desk-scale forward passes of the two crystal transformer variants.

Everything is plain numpy with frozen, seeded weights: the point is numerical
verification of the architecture's geometric claims plus feature extraction
for a closed-form ridge readout, not gradient training.

Layer algebra (node-wise transformer):

    q = LN_Q(f_i),  k = (LN_K(f_i) | LN_K(f_j) | LN_E(f_e)),  v likewise
    alpha = q * sigma_K(k) / sqrt(d)
    msg = sigmoid(BN(alpha)) * sigma_V(v)
    f_i <- softplus(f_i + BN(sum_j msg))

The edge-wise transformer updates each edge feature from the three lattice
self-edge features and the corresponding angle embeddings; the equivariant
update layer stacks two tensor products over spherical harmonics so that the
result carries all two-hop bond-angle information while staying invariant.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    MissingSelfEdgesError,
    NonfiniteInputError,
    NonpositiveDistanceError,
    ShapeMismatchError,
    UnknownSpeciesError,
    WrongGraphKindError,
)
from .graph import EQUIVARIANT, INVARIANT, CrystalGraph
from .spherical import (
    spherical_harmonics,
    tensor_product_out0,
    tensor_product_out_lambda,
)

ICOMFORMER = "icomformer"
ECOMFORMER = "ecomformer"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RbfSpec:
    count: int
    low: float
    high: float

    def centers(self) -> np.ndarray:
        return np.linspace(self.low, self.high, self.count)

    @property
    def gamma(self) -> float:
        spacing = (self.high - self.low) / (self.count - 1)
        return 1.0 / (2.0 * spacing * spacing)


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters; defaults are the desk-scale setup (hidden 64)."""

    hidden_dim: int = 64
    embed_dim_species: int = 92
    n_node_layers: int = 2
    n_edge_layers: int = 1
    n_equivariant_layers: int = 1
    potential_constant: float = -0.75
    rbf_dist_count: int = 256
    rbf_dist_min: float = -4.0
    rbf_dist_max: float = 0.0
    rbf_angle_count: int = 256
    rbf_angle_min: float = -1.0
    rbf_angle_max: float = 1.0
    sh_c0: float = 1.0
    sh_c1: float = 1.0
    tp_order0_channels: int = 128
    tp_order12_channels: int = 8
    max_rotation_order: int = 2
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if min(self.hidden_dim, self.embed_dim_species, self.n_node_layers) < 1:
            raise ValueError("dimensions and node layer count must be >= 1")
        if min(self.n_edge_layers, self.n_equivariant_layers) < 0:
            raise ValueError("layer counts must be >= 0")
        if min(self.rbf_dist_count, self.rbf_angle_count) < 2:
            raise ValueError("RBF expansions need at least 2 centers")
        if self.rbf_dist_min >= self.rbf_dist_max or self.rbf_angle_min >= self.rbf_angle_max:
            raise ValueError("RBF centers must be strictly increasing")
        if min(self.tp_order0_channels, self.tp_order12_channels) < 1:
            raise ValueError("tensor product channel counts must be >= 1")
        if self.max_rotation_order not in (1, 2):
            raise ValueError("max_rotation_order must be 1 or 2")

    @property
    def rbf_dist(self) -> RbfSpec:
        return RbfSpec(self.rbf_dist_count, self.rbf_dist_min, self.rbf_dist_max)

    @property
    def rbf_angle(self) -> RbfSpec:
        return RbfSpec(self.rbf_angle_count, self.rbf_angle_min, self.rbf_angle_max)

    @classmethod
    def from_file(cls, path: str) -> "ModelConfig":
        text = open(path, "rb").read()
        if str(path).endswith(".toml"):
            try:
                import tomllib
            except ImportError:
                import tomli as tomllib
            data = tomllib.loads(text.decode("utf-8"))
        else:
            data = json.loads(text.decode("utf-8"))
        if not isinstance(data, dict):
            raise ValueError("model config file must hold an object/table")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model config fields: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=1) + "\n"


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass
class Linear:
    w: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)


@dataclass
class Mlp:
    """linear -> silu -> linear."""

    lin1: Linear
    lin2: Linear


@dataclass
class BatchNorm:
    scale: np.ndarray
    shift: np.ndarray
    mean: np.ndarray
    var: np.ndarray


@dataclass
class Embeddings:
    species_table: np.ndarray  # (119, embed_dim_species); row 0 unused
    node_proj: Linear
    edge_proj: Linear
    angle_proj: Linear


@dataclass
class NodeLayer:
    ln_q: Linear
    ln_k: Linear
    ln_v: Linear
    ln_e: Linear
    sigma_k: Mlp
    sigma_v: Mlp
    bn_alpha: BatchNorm
    bn_msg: BatchNorm


@dataclass
class EdgeLayer:
    ln_q: Linear
    ln_k: Linear
    ln_v: Linear
    ln_k_m: list  # 3 x Linear, per lattice vector
    ln_v_m: list
    ln_theta: Linear
    sigma_k: Mlp
    sigma_v: Mlp
    bn_alpha: BatchNorm
    bn_msg: BatchNorm


@dataclass
class EquivariantLayer:
    ln_pre: Linear  # hidden -> order-0 channels
    w1_order0: np.ndarray
    w1_order1: np.ndarray
    w1_order2: np.ndarray
    w2_order0: np.ndarray
    w2_order1: np.ndarray
    w2_order2: np.ndarray
    bn: BatchNorm
    sigma_lin: Linear  # order-0 channels -> hidden
    ln_equi: Linear


@dataclass
class Readout:
    lin1: Linear
    lin2: Linear


@dataclass
class ModelParameters:
    variant: str
    embeddings: Embeddings
    node_layers: list
    edge_layers: list
    equivariant_layers: list
    readout: Readout


def _init_linear(rng, n_out: int, n_in: int) -> Linear:
    bound = 1.0 / np.sqrt(n_in)
    return Linear(
        w=rng.uniform(-bound, bound, size=(n_out, n_in)),
        b=rng.uniform(-bound, bound, size=n_out),
    )


def _init_mlp(rng, n_in: int, n_out: int) -> Mlp:
    return Mlp(lin1=_init_linear(rng, n_out, n_in), lin2=_init_linear(rng, n_out, n_out))


def _init_bn(dim: int) -> BatchNorm:
    return BatchNorm(
        scale=np.ones(dim), shift=np.zeros(dim), mean=np.zeros(dim), var=np.ones(dim)
    )


def _init_tp_weight(rng, n_out: int, n_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(n_in)
    return rng.uniform(-bound, bound, size=(n_out, n_in))


def init_parameters(
    config: ModelConfig, variant: str, species_table: Optional[np.ndarray] = None
) -> ModelParameters:
    """Deterministic parameter initialization from ``config.seed``.

    ``species_table`` may override the seeded random atom-embedding table
    (shape (119, embed_dim_species)).
    """
    if variant not in (ICOMFORMER, ECOMFORMER):
        raise ValueError(f"unknown variant {variant!r}")
    rng = np.random.default_rng(config.seed)
    h = config.hidden_dim

    table = rng.normal(size=(119, config.embed_dim_species))
    table[0] = 0.0
    if species_table is not None:
        table = np.asarray(species_table, dtype=float)
        if table.shape != (119, config.embed_dim_species):
            raise ShapeMismatchError(
                f"species table must be (119, {config.embed_dim_species})"
            )
    embeddings = Embeddings(
        species_table=table,
        node_proj=_init_linear(rng, h, config.embed_dim_species),
        edge_proj=_init_linear(rng, h, config.rbf_dist_count),
        angle_proj=_init_linear(rng, h, config.rbf_angle_count),
    )

    node_layers = [
        NodeLayer(
            ln_q=_init_linear(rng, h, h),
            ln_k=_init_linear(rng, h, h),
            ln_v=_init_linear(rng, h, h),
            ln_e=_init_linear(rng, h, h),
            sigma_k=_init_mlp(rng, 3 * h, h),
            sigma_v=_init_mlp(rng, 3 * h, h),
            bn_alpha=_init_bn(h),
            bn_msg=_init_bn(h),
        )
        for _ in range(config.n_node_layers)
    ]

    edge_layers = []
    if variant == ICOMFORMER:
        edge_layers = [
            EdgeLayer(
                ln_q=_init_linear(rng, h, h),
                ln_k=_init_linear(rng, h, h),
                ln_v=_init_linear(rng, h, h),
                ln_k_m=[_init_linear(rng, h, h) for _ in range(3)],
                ln_v_m=[_init_linear(rng, h, h) for _ in range(3)],
                ln_theta=_init_linear(rng, h, h),
                sigma_k=_init_mlp(rng, 3 * h, h),
                sigma_v=_init_mlp(rng, 3 * h, h),
                bn_alpha=_init_bn(h),
                bn_msg=_init_bn(h),
            )
            for _ in range(config.n_edge_layers)
        ]

    equivariant_layers = []
    if variant == ECOMFORMER:
        c0 = config.tp_order0_channels
        c12 = config.tp_order12_channels
        equivariant_layers = [
            EquivariantLayer(
                ln_pre=_init_linear(rng, c0, h),
                w1_order0=_init_tp_weight(rng, c0, c0),
                w1_order1=_init_tp_weight(rng, c12, c0),
                w1_order2=_init_tp_weight(rng, c12, c0),
                w2_order0=_init_tp_weight(rng, c0, c0),
                w2_order1=_init_tp_weight(rng, c0, c12),
                w2_order2=_init_tp_weight(rng, c0, c12),
                bn=_init_bn(c0),
                sigma_lin=_init_linear(rng, h, c0),
                ln_equi=_init_linear(rng, h, h),
            )
            for _ in range(config.n_equivariant_layers)
        ]

    readout = Readout(lin1=_init_linear(rng, h, h), lin2=_init_linear(rng, 1, h))
    return ModelParameters(
        variant=variant,
        embeddings=embeddings,
        node_layers=node_layers,
        edge_layers=edge_layers,
        equivariant_layers=equivariant_layers,
        readout=readout,
    )


def _flatten(obj, prefix: str, out: dict) -> None:
    if isinstance(obj, np.ndarray):
        out[prefix] = obj.tolist()
    elif isinstance(obj, str):
        out[prefix] = obj
    elif isinstance(obj, list):
        for i, item in enumerate(obj):
            _flatten(item, f"{prefix}.{i}", out)
    elif dataclasses.is_dataclass(obj):
        for f in dataclasses.fields(obj):
            _flatten(getattr(obj, f.name), f"{prefix}.{f.name}" if prefix else f.name, out)
    else:
        raise TypeError(f"cannot serialize {type(obj)} at {prefix}")


def parameters_to_json(params: ModelParameters) -> str:
    """Flat JSON of named arrays; field paths are dotted."""
    out: dict = {}
    _flatten(params, "", out)
    return json.dumps(out) + "\n"


def _fill(obj, prefix: str, data: dict):
    if isinstance(obj, np.ndarray):
        if prefix not in data:
            raise ShapeMismatchError(f"parameter file missing {prefix!r}")
        arr = np.asarray(data[prefix], dtype=float)
        if arr.shape != obj.shape:
            raise ShapeMismatchError(
                f"{prefix}: expected shape {obj.shape}, got {arr.shape}"
            )
        return arr
    if isinstance(obj, str):
        return obj
    if isinstance(obj, list):
        return [_fill(item, f"{prefix}.{i}", data) for i, item in enumerate(obj)]
    if dataclasses.is_dataclass(obj):
        kwargs = {
            f.name: _fill(getattr(obj, f.name), f"{prefix}.{f.name}" if prefix else f.name, data)
            for f in dataclasses.fields(obj)
        }
        return type(obj)(**kwargs)
    raise TypeError(f"cannot deserialize {type(obj)} at {prefix}")


def parameters_from_json(text: str, config: ModelConfig) -> ModelParameters:
    data = json.loads(text)
    if not isinstance(data, dict) or "variant" not in data:
        raise ShapeMismatchError("parameter file must be an object with a variant")
    template = init_parameters(config, data["variant"])
    return _fill(template, "", data)


# ---------------------------------------------------------------------------
# primitive layers
# ---------------------------------------------------------------------------

def softplus(x):
    return np.logaddexp(0.0, x)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def silu(x):
    return x * sigmoid(x)


def _linear(x, p: Linear):
    return x @ p.w.T + p.b


def _mlp(x, p: Mlp):
    return _linear(silu(_linear(x, p.lin1)), p.lin2)


def _bn(x, p: BatchNorm, eps: float):
    return p.scale * (x - p.mean) / np.sqrt(p.var + eps) + p.shift


def _segment_sum(values: np.ndarray, index: np.ndarray, n: int) -> np.ndarray:
    """Sum rows of ``values`` per index; fast path for sorted indices."""
    if len(index) and np.all(np.diff(index) >= 0):
        bounds = np.searchsorted(index, np.arange(n))
        out = np.add.reduceat(values, bounds, axis=0)
        empty = bounds == np.append(bounds[1:], len(index))
        if np.any(empty):
            out[empty] = 0.0
        return out
    out = np.zeros((n,) + values.shape[1:])
    np.add.at(out, index, values)
    return out


def rbf_expand(x, spec: RbfSpec) -> np.ndarray:
    """Gaussian expansion ``exp(-gamma (x - center)^2)`` over the center grid."""
    x = np.asarray(x, dtype=float)
    return np.exp(-spec.gamma * (x[..., None] - spec.centers()) ** 2)


def embed_nodes(atomic_numbers, params: ModelParameters) -> np.ndarray:
    z = np.asarray(atomic_numbers, dtype=int)
    if np.any(z < 1) or np.any(z > 118):
        raise UnknownSpeciesError("atomic numbers must lie in 1..118")
    return _linear(params.embeddings.species_table[z], params.embeddings.node_proj)


def embed_edge_distances(dists, params: ModelParameters, config: ModelConfig) -> np.ndarray:
    d = np.asarray(dists, dtype=float)
    if np.any(d <= 0.0):
        raise NonpositiveDistanceError("edge distances must be positive")
    expanded = rbf_expand(config.potential_constant / d, config.rbf_dist)
    return softplus(_linear(expanded, params.embeddings.edge_proj))


def embed_edge_angles(angles, params: ModelParameters, config: ModelConfig) -> np.ndarray:
    expanded = rbf_expand(np.cos(np.asarray(angles, dtype=float)), config.rbf_angle)
    return softplus(_linear(expanded, params.embeddings.angle_proj))


def embed_edge_invariant(dist, angles, params: ModelParameters, config: ModelConfig):
    """(f_e, f_theta) for one edge or a batch.

    Distances are mapped through the pairwise-potential transform
    ``c / dist`` before the RBF grid; angles through their cosines.
    """
    return (
        embed_edge_distances(dist, params, config),
        embed_edge_angles(angles, params, config),
    )


def node_transformer_layer(
    node_f: np.ndarray,
    edge_f: np.ndarray,
    src: np.ndarray,
    dst: np.ndarray,
    layer: NodeLayer,
    config: ModelConfig,
) -> np.ndarray:
    h = config.hidden_dim
    if node_f.shape[1] != h or edge_f.shape[1] != h:
        raise ShapeMismatchError("feature widths do not match the config")
    fi = node_f[dst]
    fj = node_f[src]
    fe = _linear(edge_f, layer.ln_e)
    q = _linear(fi, layer.ln_q)
    k = np.concatenate([_linear(fi, layer.ln_k), _linear(fj, layer.ln_k), fe], axis=1)
    v = np.concatenate([_linear(fi, layer.ln_v), _linear(fj, layer.ln_v), fe], axis=1)
    alpha = q * _mlp(k, layer.sigma_k) / np.sqrt(h)
    msg = sigmoid(_bn(alpha, layer.bn_alpha, config.bn_eps)) * _mlp(v, layer.sigma_v)
    agg = _segment_sum(msg, dst, node_f.shape[0])
    return softplus(node_f + _bn(agg, layer.bn_msg, config.bn_eps))


def edge_transformer_layer(
    edge_f: np.ndarray,
    angle_f: np.ndarray,
    designated: np.ndarray,
    dst: np.ndarray,
    layer: EdgeLayer,
    config: ModelConfig,
) -> np.ndarray:
    """Update edge features from the three lattice self-edges and angles.

    ``angle_f`` is (E, 3, hidden); ``designated`` is the (n, 3) self-edge
    index table of the graph.
    """
    if np.any(designated < 0):
        raise MissingSelfEdgesError("edge-wise transformer needs designated self-edges")
    h = config.hidden_dim
    q = _linear(edge_f, layer.ln_q)
    ke = _linear(edge_f, layer.ln_k)
    ve = _linear(edge_f, layer.ln_v)
    total = np.zeros_like(edge_f)
    for m in range(3):
        lat = edge_f[designated[dst, m]]
        th = _linear(angle_f[:, m], layer.ln_theta)
        k = np.concatenate([ke, _linear(lat, layer.ln_k_m[m]), th], axis=1)
        v = np.concatenate([ve, _linear(lat, layer.ln_v_m[m]), th], axis=1)
        alpha = q * _mlp(k, layer.sigma_k) / np.sqrt(h)
        total = total + sigmoid(_bn(alpha, layer.bn_alpha, config.bn_eps)) * _mlp(
            v, layer.sigma_v
        )
    return softplus(edge_f + _bn(total, layer.bn_msg, config.bn_eps))


def equivariant_update_layer(
    node_f: np.ndarray,
    unit_vecs: np.ndarray,
    src: np.ndarray,
    dst: np.ndarray,
    layer: EquivariantLayer,
    config: ModelConfig,
) -> np.ndarray:
    """Two stacked tensor products over spherical harmonics (Y0, Y1, Y2)."""
    n = node_f.shape[0]
    y0, y1, y2 = spherical_harmonics(unit_vecs, config.sh_c0, config.sh_c1)
    deg = np.bincount(dst, minlength=n).astype(float)
    if np.any(deg == 0):
        raise ShapeMismatchError("every node needs at least one incoming edge")

    fprime = _linear(node_f, layer.ln_pre)
    t0 = tensor_product_out0(fprime[src][:, :, None], y0, layer.w1_order0)
    f0 = fprime + _segment_sum(t0, dst, n) / deg[:, None]
    t1 = tensor_product_out_lambda(fprime[src], y1, layer.w1_order1)
    f1 = _segment_sum(t1, dst, n) / deg[:, None, None]

    s = tensor_product_out0(f0[src][:, :, None], y0, layer.w2_order0)
    s = s + tensor_product_out0(f1[src], y1, layer.w2_order1)
    if config.max_rotation_order >= 2:
        t2 = tensor_product_out_lambda(fprime[src], y2, layer.w1_order2)
        f2 = _segment_sum(t2, dst, n) / deg[:, None, None]
        s = s + tensor_product_out0(f2[src], y2, layer.w2_order2)
    fstar = _segment_sum(s, dst, n) / deg[:, None]

    gated = softplus(_linear(softplus(_bn(fstar, layer.bn, config.bn_eps)), layer.sigma_lin))
    return gated + _linear(node_f, layer.ln_equi)


# ---------------------------------------------------------------------------
# full forward pass
# ---------------------------------------------------------------------------

def _node_states(graph: CrystalGraph, config: ModelConfig, params: ModelParameters) -> np.ndarray:
    variant = params.variant
    if variant == ICOMFORMER and graph.kind != INVARIANT:
        raise WrongGraphKindError("iComFormer consumes invariant graphs")
    if variant == ECOMFORMER and graph.kind != EQUIVARIANT:
        raise WrongGraphKindError("eComFormer consumes equivariant graphs")

    node_f = embed_nodes(graph.atomic_numbers, params)
    edge_f = embed_edge_distances(graph.dists, params, config)

    node_f = node_transformer_layer(node_f, edge_f, graph.src, graph.dst, params.node_layers[0], config)

    if variant == ICOMFORMER:
        if params.edge_layers:
            angle_f = embed_edge_angles(graph.angles, params, config)
            if graph.designated is None or np.any(graph.designated < 0):
                raise MissingSelfEdgesError("iComFormer needs designated self-edges")
            for layer in params.edge_layers:
                edge_f = edge_transformer_layer(
                    edge_f, angle_f, graph.designated, graph.dst, layer, config
                )
    else:
        unit = graph.vecs / graph.dists[:, None]
        for layer in params.equivariant_layers:
            node_f = equivariant_update_layer(
                node_f, unit, graph.src, graph.dst, layer, config
            )

    for layer in params.node_layers[1:]:
        node_f = node_transformer_layer(node_f, edge_f, graph.src, graph.dst, layer, config)
    return node_f


def featurize(graph: CrystalGraph, config: ModelConfig, params: ModelParameters) -> np.ndarray:
    """Mean-pooled final node features (the frozen feature vector)."""
    return _node_states(graph, config, params).mean(axis=0)


def forward(graph: CrystalGraph, config: ModelConfig, params: ModelParameters) -> float:
    """Scalar property prediction: pooling plus a two-layer readout."""
    pooled = featurize(graph, config, params)
    return float(_linear(silu(_linear(pooled, params.readout.lin1)), params.readout.lin2)[0])


# ---------------------------------------------------------------------------
# two-hop bond-angle identity
# ---------------------------------------------------------------------------

def two_hop_angle_check(graph: CrystalGraph):
    """Stacked tensor products vs a direct double sum of bond-angle cosines.

    With constant node scalars and unit path weights the order-1 branch of
    the equivariant update equals, per node i,

        (1/|N_i|) sum_{j in N_i} (1/|N_j|) sum_{m in N_j} cos(theta_{mj,ji}).

    Returns ``(tp_values, oracle)``; the oracle is computed straight from the
    edge vectors with explicit cosines, independent of the tensor-product
    code path.
    """
    if graph.kind != EQUIVARIANT:
        raise WrongGraphKindError("two-hop check runs on equivariant graphs")
    n = graph.n_nodes
    unit = graph.vecs / graph.dists[:, None]
    deg = np.bincount(graph.dst, minlength=n).astype(float)

    ones = np.ones((n, 1))
    w = np.ones((1, 1))
    _, y1, _ = spherical_harmonics(unit)
    t1 = tensor_product_out_lambda(ones[graph.src], y1, w)  # (E, 1, 3)
    f1 = _segment_sum(t1, graph.dst, n) / deg[:, None, None]
    s = tensor_product_out0(f1[graph.src], y1, w)[:, 0]
    tp_values = _segment_sum(s, graph.dst, n) / deg

    oracle = np.zeros(n)
    edges_into = [np.nonzero(graph.dst == i)[0] for i in range(n)]
    for i in range(n):
        acc = 0.0
        for e in edges_into[i]:
            j = int(graph.src[e])
            ve = graph.vecs[e]
            ne = np.linalg.norm(ve)
            inner = 0.0
            for e2 in edges_into[j]:
                v2 = graph.vecs[e2]
                inner += float(np.dot(v2, ve)) / (np.linalg.norm(v2) * ne)
            acc += inner / len(edges_into[j])
        oracle[i] = acc / len(edges_into[i])
    return tp_values, oracle


# ---------------------------------------------------------------------------
# ridge readout
# ---------------------------------------------------------------------------

def fit_readout_ridge(features, targets, reg: float) -> np.ndarray:
    """Closed-form ridge weights: solves (F^T F + reg I) w = F^T y.

    Implemented through the augmented least-squares system for numerical
    stability.
    """
    f = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if f.ndim != 2 or y.shape != (f.shape[0],) or f.shape[0] < 1:
        raise ShapeMismatchError("features must be (rows, dim); targets (rows,)")
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(y))):
        raise NonfiniteInputError("features and targets must be finite")
    if reg < 0:
        raise ValueError("regularization must be >= 0")
    d = f.shape[1]
    a = np.vstack([f, np.sqrt(reg) * np.eye(d)])
    b = np.concatenate([y, np.zeros(d)])
    w, *_ = np.linalg.lstsq(a, b, rcond=None)
    return w
