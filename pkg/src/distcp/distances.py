"""Coordinate-wise generalized distances.

Every distance here has the form

    phi(x, y) = h( (1/d) * sum_k psi(|x_k - y_k|) )

with ``h`` and ``psi`` continuous, increasing and vanishing at zero. The block
variants replace the coordinate differences ``|x_k - y_k|`` by Euclidean norms
of differences over contiguous coordinate blocks, and average over the number
of blocks instead of ``d``.

=========  ===========  =====================
kind       h(t)         psi(t)
=========  ===========  =====================
l2         sqrt(t)      t**2
l1         t            t
exp        t            1 - exp(-t / scale)
block_l1   t            t        (on blocks)
block_exp  t            1 - exp(-t / scale)  (on blocks)
=========  ===========  =====================
"""

from dataclasses import dataclass
import json

import numpy as np

KINDS = ("l2", "l1", "exp", "block_l1", "block_exp")
BLOCK_KINDS = ("block_l1", "block_exp")
EXP_KINDS = ("exp", "block_exp")

DEFAULT_EXP_SCALE = 2.0

# display names used in reports and bench tables
METHOD_NAMES = {
    "l2": "l2",
    "l1": "l1",
    "exp": "exp",
    "block_l1": "block-l1",
    "block_exp": "block-exp",
}


class DistanceError(ValueError):
    pass


@dataclass(frozen=True)
class DistanceSpec:
    """Choice of ``(h, psi)`` and its parameters.

    Parameters
    ----------
    kind : str
        One of ``l2``, ``l1``, ``exp``, ``block_l1``, ``block_exp``.
    exp_scale : float
        Scale ``lambda`` in ``psi(t) = 1 - exp(-t/lambda)``. Ignored by the
        non-exponential kinds.
    block_sizes : tuple of int, optional
        Sizes of contiguous coordinate blocks, in order. Required for the
        block kinds and forbidden otherwise.
    """

    kind: str = "l2"
    exp_scale: float = DEFAULT_EXP_SCALE
    block_sizes: tuple = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DistanceError(f"unknown distance kind {self.kind!r}; expected one of {KINDS}")
        if not (np.isfinite(self.exp_scale) and self.exp_scale > 0):
            raise DistanceError(f"exp_scale must be positive, got {self.exp_scale}")
        if self.kind in BLOCK_KINDS:
            if self.block_sizes is None:
                raise DistanceError(f"{self.kind} requires block_sizes")
            sizes = tuple(int(s) for s in self.block_sizes)
            if not sizes or min(sizes) < 1:
                raise DistanceError("block sizes must all be >= 1")
            object.__setattr__(self, "block_sizes", sizes)
        elif self.block_sizes is not None:
            raise DistanceError(f"block_sizes given for non-block kind {self.kind!r}")

    @property
    def is_block(self):
        return self.kind in BLOCK_KINDS

    @property
    def name(self):
        return METHOD_NAMES[self.kind]

    def validate(self, d):
        """Raise if this spec cannot be applied to ``d``-dimensional data."""
        if d < 1:
            raise DistanceError("dimension must be >= 1")
        if self.is_block and sum(self.block_sizes) != d:
            raise DistanceError(
                f"block sizes sum to {sum(self.block_sizes)} but data dimension is {d}")

    def to_dict(self):
        out = {"kind": self.kind}
        if self.kind in EXP_KINDS:
            out["exp_scale"] = float(self.exp_scale)
        if self.is_block:
            out["block_sizes"] = list(self.block_sizes)
        return out

    @classmethod
    def from_dict(cls, obj):
        sizes = obj.get("block_sizes")
        return cls(kind=obj["kind"],
                   exp_scale=float(obj.get("exp_scale", DEFAULT_EXP_SCALE)),
                   block_sizes=tuple(sizes) if sizes is not None else None)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def uniform_blocks(d, size):
    """Contiguous blocks of ``size`` coordinates; the last block may be shorter."""
    if size < 1:
        raise DistanceError("block size must be >= 1")
    full, rest = divmod(d, size)
    return (size,) * full + ((rest,) if rest else ())


def make_spec(kind, exp_scale=DEFAULT_EXP_SCALE, block_sizes=None, d=None):
    """Build a spec; ``block_sizes`` may be one int, expanded to uniform blocks over ``d``."""
    if kind not in BLOCK_KINDS:
        return DistanceSpec(kind, exp_scale)
    if block_sizes is None:
        raise DistanceError(f"{kind} requires block sizes")
    if np.ndim(block_sizes) == 0:
        if d is None:
            raise DistanceError("a single block size needs the data dimension")
        block_sizes = uniform_blocks(d, int(block_sizes))
    return DistanceSpec(kind, exp_scale, tuple(block_sizes))


def _block_norms(diff, sizes):
    # diff: (..., d) absolute coordinate differences
    if all(s == 1 for s in sizes):
        return diff
    bounds = np.cumsum((0,) + tuple(sizes))
    out = np.empty(diff.shape[:-1] + (len(sizes),), dtype=float)
    for i, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        if b - a == 1:
            out[..., i] = diff[..., a]
        else:
            out[..., i] = np.sqrt(np.sum(diff[..., a:b] ** 2, axis=-1))
    return out


def aligned_distances(spec, x, y):
    """Distances between corresponding rows of ``x`` and ``y``.

    ``x`` and ``y`` are arrays of shape ``(..., d)``; the result has shape
    ``(...)``. This is the vectorized form of :func:`eval_distance` and shares
    its arithmetic exactly.
    """
    diff = np.abs(x - y)
    if spec.is_block:
        diff = _block_norms(diff, spec.block_sizes)
    m = diff.shape[-1]
    if spec.kind == "l2":
        return np.sqrt(np.sum(diff * diff, axis=-1) / m)
    if spec.kind in EXP_KINDS:
        diff = -np.expm1(-diff / spec.exp_scale)
    return np.sum(diff, axis=-1) / m


def eval_distance(spec, x, y):
    """Evaluate the generalized distance between two vectors.

    Raises
    ------
    DistanceError
        On a dimension mismatch, an invalid block partition or non-finite
        coordinates.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise DistanceError(f"dimension mismatch: {x.shape} vs {y.shape}")
    spec.validate(x.shape[0])
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DistanceError("non-finite coordinate in input")
    return float(aligned_distances(spec, x, y))
