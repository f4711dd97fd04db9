"""Time grids and reproducible Brownian increment streams.

Randomness is counter-based: every trajectory owns a Philox stream keyed by
``(seed, trajectory_id)`` with the 32-bit ``substream`` selecting a disjoint
counter block.  Streams never share state, so particles can be advanced in any
order, in any number of threads, and still produce bitwise-identical paths.

Gaussian variates are produced by applying the inverse standard-normal CDF to
the stream's uniforms, which keeps the mapping from counter output to normal
draw monotone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

__all__ = ["TimeGrid", "StreamKey", "stream_generator", "brownian_increments"]

_U64 = 2**64
_U32 = 2**32


@dataclass(frozen=True)
class TimeGrid:
    """Discretization of a model-time interval ``[t0, t1]``.

    ``nodes`` holds the ``n_steps + 1`` node times; uniform spacing unless a
    custom node array is supplied.
    """

    t0: float
    t1: float
    n_steps: int
    nodes: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if not self.t1 > self.t0:
            raise ValueError("need t1 > t0")
        if self.nodes is None:
            nodes = self.t0 + (self.t1 - self.t0) * np.arange(self.n_steps + 1) / self.n_steps
            nodes[-1] = self.t1
        else:
            nodes = np.asarray(self.nodes, dtype=float)
            if nodes.shape != (self.n_steps + 1,):
                raise ValueError("nodes must have n_steps + 1 entries")
            if not (np.diff(nodes) > 0).all():
                raise ValueError("nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @property
    def dt(self) -> np.ndarray:
        """Step sizes, one per step."""
        return np.diff(self.nodes)

    @property
    def is_uniform(self) -> bool:
        d = self.dt
        return bool(np.allclose(d, d[0], rtol=1e-12, atol=0.0))

    def node_index(self, t: float, tol: float = 1e-9) -> int:
        """Index of the node equal to ``t`` (within ``tol``), else ValueError."""
        i = int(np.argmin(np.abs(self.nodes - t)))
        if abs(self.nodes[i] - t) > tol:
            raise ValueError(f"t={t} is not a grid node")
        return i


@dataclass(frozen=True)
class StreamKey:
    """Identifier of one independent random stream.

    Distinct keys yield independent streams; the same key always replays the
    same stream regardless of execution order or thread count.
    """

    seed: int
    trajectory_id: int = 0
    substream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < _U64:
            raise ValueError("seed must fit in 64 bits")
        if not 0 <= self.trajectory_id < _U64:
            raise ValueError("trajectory_id must fit in 64 bits")
        if not 0 <= self.substream < _U32:
            raise ValueError("substream must fit in 32 bits")

    def child(self, substream: int) -> "StreamKey":
        return StreamKey(self.seed, self.trajectory_id, substream)


def stream_generator(key: StreamKey) -> Generator:
    """Counter-based generator for ``key``.

    The Philox key packs (seed, trajectory_id); the substream selects a
    disjoint 2**128-sized counter block, so substreams of one trajectory are
    independent by construction.
    """
    bitgen = Philox(key=[key.seed, key.trajectory_id], counter=[0, 0, key.substream, 0])
    return Generator(bitgen)


def standard_normals(key: StreamKey, shape) -> np.ndarray:
    """Standard normal draws via the inverse CDF of the stream's uniforms."""
    u = stream_generator(key).random(shape)
    # random() lives in [0, 1); nudge an exact 0 off the pole of ndtri.
    np.maximum(u, 2.0**-54, out=u)
    return ndtri(u)


def brownian_increments(grid: TimeGrid, m: int, key: StreamKey) -> np.ndarray:
    """Brownian increments over ``grid`` for an m-dimensional motion.

    Returns an array of shape ``(n_steps, m)`` with row ``k`` distributed
    ``Normal(0, dt_k * I_m)``.  Deterministic in ``key``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    z = standard_normals(key, (grid.n_steps, m))
    return z * np.sqrt(grid.dt)[:, None]
