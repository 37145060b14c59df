"""Real spherical harmonics (orders 0..2) and channel-wise tensor products.

The order-2 basis is fixed to

    Y2 = (sqrt(3) xy, sqrt(3) yz, (3 z^2 - 1) / 2, sqrt(3) xz, sqrt(3)/2 (x^2 - y^2))

whose components are mutually orthogonal over the unit sphere with equal
norm. Tensor products are bilinear: contracting features of rotation order
lambda with Y_lambda gives invariants, multiplying scalars by Y_lambda gives
order-lambda outputs.
"""

from __future__ import annotations

import numpy as np

from .errors import NotUnitError, OrderMismatchError

_SQRT3 = np.sqrt(3.0)


def spherical_harmonics(direction, c0: float = 1.0, c1: float = 1.0):
    """(Y0, Y1, Y2) for one unit direction or a batch of them.

    Shapes: input (3,) or (m, 3); outputs ((m,)1, (m,)3, (m,)5).
    """
    d = np.asarray(direction, dtype=float)
    single = d.ndim == 1
    d = np.atleast_2d(d)
    norms = np.linalg.norm(d, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise NotUnitError("spherical harmonics need unit directions")
    x, y, z = d[:, 0], d[:, 1], d[:, 2]
    y0 = np.full((len(d), 1), float(c0))
    y1 = c1 * d
    y2 = np.stack(
        [
            _SQRT3 * x * y,
            _SQRT3 * y * z,
            (3.0 * z * z - 1.0) / 2.0,
            _SQRT3 * x * z,
            (_SQRT3 / 2.0) * (x * x - y * y),
        ],
        axis=1,
    )
    if single:
        return y0[0], y1[0], y2[0]
    return y0, y1, y2


def rotate_order2(r: np.ndarray) -> np.ndarray:
    """The 5x5 matrix acting on Y2 components under rotation ``r``.

    Defined by Y2(r @ d) = rotate_order2(r) @ Y2(d); built column-wise from
    an orthonormal probe of directions, used by equivariance tests.
    """
    probes = np.random.default_rng(12345).normal(size=(5, 3))
    probes /= np.linalg.norm(probes, axis=1, keepdims=True)
    _, _, y2_in = spherical_harmonics(probes)
    _, _, y2_out = spherical_harmonics(probes @ r.T)
    return np.linalg.solve(y2_in, y2_out).T


def tensor_product_out0(features: np.ndarray, y: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Invariant tensor product: contract each feature channel with Y_lambda.

    ``features``: (..., C, d); ``y``: (..., d) with d = 2*lambda + 1;
    ``weights``: (C_out, C). Output (..., C_out): every output channel is a
    learned mix of the per-channel contractions, bilinear in both arguments.
    """
    features = np.asarray(features, dtype=float)
    y = np.asarray(y, dtype=float)
    if features.shape[-1] != y.shape[-1]:
        raise OrderMismatchError(
            f"feature order dim {features.shape[-1]} != harmonic dim {y.shape[-1]}"
        )
    contracted = np.einsum("...cd,...d->...c", features, y)
    return contracted @ np.asarray(weights, dtype=float).T


def tensor_product_out_lambda(scalars: np.ndarray, y: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Order-raising tensor product: scalars times Y_lambda per channel.

    ``scalars``: (..., C); ``y``: (..., d); ``weights``: (C_out, C).
    Output (..., C_out, d) rotating as order lambda.
    """
    scalars = np.asarray(scalars, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.shape[-1] not in (1, 3, 5):
        raise OrderMismatchError(f"harmonic dim {y.shape[-1]} is not 1, 3, or 5")
    mixed = scalars @ np.asarray(weights, dtype=float).T
    return mixed[..., :, None] * y[..., None, :]
