"""Particle engine: Euler-Maruyama schemes for classical, frozen-flow and
self-interacting dynamics.

Every particle owns the random stream keyed by ``(seed, particle_index)``,
so ensembles are reproducible bitwise regardless of execution order.  Two
devices keep the explicit scheme alive on hard coefficients:

* particles leaving the truncation ball are frozen and flagged (mirrors the
  stopping-time localization used in the analysis of superlinear drifts);
* the locally integrable drift part is tamed: its one-step increment is
  clipped in norm at ``jump_cap``.

The frozen-flow scheme reads the measure argument at the left grid node.
Feeding the empirical flow of an interacting run back through the frozen
scheme with the same seed reproduces the interacting trajectories exactly.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .paths import StreamKey, TimeGrid, standard_normals, stream_generator

__all__ = [
    "ParticleCloud",
    "MeasureFlow",
    "PathEnsemble",
    "BlowUpError",
    "cloud_integral",
    "simulate_frozen",
    "simulate_interacting",
    "simulate_classical",
    "simulate_terminal",
    "write_ensemble",
    "read_ensemble",
    "ensemble_to_csv",
    "flow_to_csv",
]

PARTICLE_SUBSTREAM = 1
INIT_SUBSTREAM = 2

DEFAULT_TRUNC_RADIUS = 1e6
DEFAULT_JUMP_CAP = 1.0


class BlowUpError(RuntimeError):
    def __init__(self, trajectory: int, step: int, what: str):
        super().__init__(f"{what} became non-finite at trajectory {trajectory}, step {step}")
        self.trajectory = trajectory
        self.step = step


@dataclass(frozen=True)
class ParticleCloud:
    """Weighted sample representing an empirical probability measure."""

    points: np.ndarray  # (N, d)
    weights: np.ndarray  # (N,)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.shape[0] or pts.shape[0] < 1:
            raise ValueError("points and weights must align, N >= 1")
        if not np.isfinite(pts).all():
            raise ValueError("cloud points must be finite")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def uniform(cls, points) -> "ParticleCloud":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))

    @classmethod
    def dirac(cls, x, n: int = 1, dim: int | None = None) -> "ParticleCloud":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if dim is not None and x.size == 1:
            x = np.full(dim, float(x[0]))
        return cls.uniform(np.tile(x, (n, 1)))

    def resample(self, n: int, seed: int, substream: int = INIT_SUBSTREAM) -> "ParticleCloud":
        """Draw ``n`` points from the cloud (with replacement), uniform weights."""
        rng = stream_generator(StreamKey(seed, 0, substream))
        idx = rng.choice(self.n, size=n, p=self.weights)
        return ParticleCloud.uniform(self.points[idx])


def cloud_integral(cloud: ParticleCloud, h) -> float:
    """Weighted integral ``sum_i w_i h(x_i)``."""
    vals = np.asarray(h(cloud.points), dtype=float)
    if not np.isfinite(vals).all():
        bad = int(np.argwhere(~np.isfinite(vals))[0][0])
        raise BlowUpError(bad, -1, "test function")
    return float(np.dot(cloud.weights, vals))


@dataclass
class MeasureFlow:
    """Time-indexed sequence of clouds, aligned with a grid."""

    grid: TimeGrid
    clouds: list
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.clouds) != self.grid.n_steps + 1:
            raise ValueError("need one cloud per grid node")
        ns = {c.n for c in self.clouds}
        if len(ns) != 1:
            raise ValueError("all clouds must share the particle count")

    @property
    def n(self) -> int:
        return self.clouds[0].n

    @classmethod
    def constant(cls, grid: TimeGrid, cloud: ParticleCloud) -> "MeasureFlow":
        return cls(grid, [cloud] * (grid.n_steps + 1))

    @classmethod
    def from_ensemble(cls, ens: "PathEnsemble", weights=None, diagnostics=None) -> "MeasureFlow":
        w = (
            np.full(ens.n, 1.0 / ens.n)
            if weights is None
            else np.asarray(weights, dtype=float)
        )
        clouds = [ParticleCloud(ens.trajectories[:, k, :], w) for k in range(ens.grid.n_steps + 1)]
        return cls(ens.grid, clouds, diagnostics or {})


@dataclass
class PathEnsemble:
    """Bundle of simulated trajectories with per-trajectory log-weights."""

    grid: TimeGrid
    trajectories: np.ndarray  # (N, n_steps+1, d)
    log_weights: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        tr = np.asarray(self.trajectories, dtype=float)
        if tr.ndim != 3 or tr.shape[0] < 1 or tr.shape[1] != self.grid.n_steps + 1:
            raise ValueError("trajectories must have shape (N, n_steps+1, d)")
        if self.log_weights is None:
            self.log_weights = np.zeros(tr.shape[0])
        object.__setattr__(self, "trajectories", tr)

    @property
    def n(self) -> int:
        return self.trajectories.shape[0]

    @property
    def dim(self) -> int:
        return self.trajectories.shape[2]

    def terminal_cloud(self, weights=None) -> ParticleCloud:
        w = np.full(self.n, 1.0 / self.n) if weights is None else weights
        return ParticleCloud(self.trajectories[:, -1, :], w)


# ---------------------------------------------------------------------------
# stepping engine
# ---------------------------------------------------------------------------


def _draw_increments(seed, ids, dt, m) -> np.ndarray:
    """Per-trajectory increments, stacked: shape (len(ids), n_steps, m)."""
    n_steps = len(dt)
    z = np.empty((len(ids), n_steps, m))
    for row, tid in enumerate(ids):
        z[row] = standard_normals(StreamKey(seed, int(tid), PARTICLE_SUBSTREAM), (n_steps, m))
    return z * np.sqrt(np.asarray(dt))[None, :, None]


def _tamed_kick(model, t, x, dt, jump_cap):
    """Increment of the singular drift part, clipped in norm at jump_cap."""
    if model.drift_singular is None:
        return 0.0, 0
    b0 = np.asarray(model.drift_singular(t, x), dtype=float)
    if not np.isfinite(b0).all():
        bad = int(np.argwhere(~np.isfinite(b0))[0][0])
        raise BlowUpError(bad, -1, "singular drift")
    incr = b0 * dt
    norm = np.linalg.norm(incr, axis=1)
    over = norm > jump_cap
    if over.any():
        incr[over] *= (jump_cap / norm[over])[:, None]
    return incr, int(over.sum())


def _step(model, t, x, mvals, dW, dt, active, jump_cap, step_index):
    b1 = np.asarray(model.drift_regular(t, x, mvals), dtype=float)
    if not np.isfinite(b1[active]).all():
        bad = int(np.argwhere(active & ~np.isfinite(b1).all(axis=1))[0][0])
        raise BlowUpError(bad, step_index, "drift")
    sig = np.asarray(model.sigma(t, x), dtype=float)
    if not np.isfinite(sig[active]).all():
        bad = int(np.argwhere(active & ~np.isfinite(sig).reshape(len(x), -1).all(axis=1))[0][0])
        raise BlowUpError(bad, step_index, "diffusion")
    kick, n_clipped = _tamed_kick(model, t, x, dt, jump_cap)
    x_new = x + b1 * dt + kick + np.einsum("ndm,nm->nd", sig, dW)
    return np.where(active[:, None], x_new, x), n_clipped


def _run_engine(
    model,
    init_points: np.ndarray,
    grid: TimeGrid,
    seed: int,
    mvals_at,
    store: str,
    trunc_radius: float,
    jump_cap: float,
    track_sup_V: bool = False,
    chunk: int | None = None,
    interacting: bool = False,
):
    """Shared Euler loop.

    ``mvals_at(k, points)`` supplies the measure-functional values at node k
    (ignored argument order lets frozen flows precompute and interacting runs
    read the live cloud).  ``store`` is 'all' or 'terminal'.
    """
    n, d = init_points.shape
    m = model.bm_dim
    dt_arr = grid.dt
    n_steps = grid.n_steps

    if interacting or store == "all" or chunk is None:
        chunks = [np.arange(n)]
    else:
        chunks = [np.arange(i, min(i + chunk, n)) for i in range(0, n, chunk)]

    traj = np.empty((n, n_steps + 1, d)) if store == "all" else None
    terminal = np.empty((n, d))
    sup_v = np.empty(n) if track_sup_V else None
    trunc_step = np.full(n, -1, dtype=np.int64)
    n_clipped = 0
    node_points = [None] * (n_steps + 1) if interacting else None

    for ids in chunks:
        x = init_points[ids].copy()
        dW = _draw_increments(seed, ids, dt_arr, m)
        active = np.ones(len(ids), dtype=bool)
        if store == "all":
            traj[ids, 0] = x
        if track_sup_V:
            running = np.asarray(model.lyapunov_V(x), dtype=float).copy()
        if interacting:
            node_points[0] = x.copy()
        for k in range(n_steps):
            t_k = grid.nodes[k]
            mv = mvals_at(k, x)
            x, clipped = _step(model, t_k, x, mv, dW[:, k, :], dt_arr[k], active, jump_cap, k)
            n_clipped += clipped
            bad = active & (
                (np.linalg.norm(x, axis=1) >= trunc_radius) | ~np.isfinite(x).all(axis=1)
            )
            if bad.any():
                x = np.where(np.isfinite(x), x, 0.0)  # freeze runaway coordinates
                trunc_step[ids[bad]] = k + 1
                active &= ~bad
            if store == "all":
                traj[ids, k + 1] = x
            if track_sup_V:
                running = np.maximum(running, np.asarray(model.lyapunov_V(x), dtype=float))
            if interacting:
                node_points[k + 1] = x.copy()
        terminal[ids] = x
        if track_sup_V:
            sup_v[ids] = running

    frozen = float((trunc_step >= 0).mean())
    diag = {"frozen_fraction": frozen, "n_clipped": n_clipped, "trunc_step": trunc_step}
    return {
        "trajectories": traj,
        "terminal": terminal,
        "sup_V": sup_v,
        "diagnostics": diag,
        "node_points": node_points,
    }


def simulate_frozen(
    model,
    flow: MeasureFlow,
    init: ParticleCloud,
    grid: TimeGrid,
    seed: int,
    trunc_radius: float = DEFAULT_TRUNC_RADIUS,
    jump_cap: float = DEFAULT_JUMP_CAP,
) -> PathEnsemble:
    """Advance ``init.n`` trajectories with the measure argument read from a
    fixed flow at the left grid node."""
    if flow.grid.n_steps != grid.n_steps or not np.allclose(flow.grid.nodes, grid.nodes):
        raise ValueError("flow grid must match the integration grid")
    mvals = [model.measure_values(c) for c in flow.clouds]
    out = _run_engine(
        model,
        init.points,
        grid,
        seed,
        mvals_at=lambda k, pts: mvals[k],
        store="all",
        trunc_radius=trunc_radius,
        jump_cap=jump_cap,
    )
    return PathEnsemble(grid, out["trajectories"], diagnostics=out["diagnostics"])


def simulate_classical(
    model,
    init: ParticleCloud,
    grid: TimeGrid,
    seed: int,
    trunc_radius: float = DEFAULT_TRUNC_RADIUS,
    jump_cap: float = DEFAULT_JUMP_CAP,
) -> PathEnsemble:
    """Frozen scheme with the measure argument at zero; for models whose
    drift does not read the measure."""
    out = _run_engine(
        model,
        init.points,
        grid,
        seed,
        mvals_at=lambda k, pts: None,
        store="all",
        trunc_radius=trunc_radius,
        jump_cap=jump_cap,
    )
    return PathEnsemble(grid, out["trajectories"], diagnostics=out["diagnostics"])


def _interacting_mvals(model, weights):
    def at(k, pts):
        return np.array(
            [float(np.dot(weights, h(pts))) for h in model.measure_tests]
        ) if model.measure_tests else None

    return at


def simulate_interacting(
    model,
    n: int,
    init,
    grid: TimeGrid,
    seed: int,
    trunc_radius: float = DEFAULT_TRUNC_RADIUS,
    jump_cap: float = DEFAULT_JUMP_CAP,
) -> MeasureFlow:
    """Advance ``n`` particles whose drift reads the live empirical cloud.

    ``init`` is a ParticleCloud with ``n`` points or a callable
    ``init(n, rng) -> (n, d) array`` drawing the initial sample.
    """
    if n < 2:
        raise ValueError("interacting system needs at least two particles")
    if callable(init):
        rng = stream_generator(StreamKey(seed, 0, INIT_SUBSTREAM))
        init_cloud = ParticleCloud.uniform(np.atleast_2d(init(n, rng)))
    else:
        init_cloud = init
    if init_cloud.n != n:
        raise ValueError("init cloud size must equal n")
    out = _run_engine(
        model,
        init_cloud.points,
        grid,
        seed,
        mvals_at=_interacting_mvals(model, init_cloud.weights),
        store="terminal",
        trunc_radius=trunc_radius,
        jump_cap=jump_cap,
        interacting=True,
    )
    clouds = [ParticleCloud(pts, init_cloud.weights) for pts in out["node_points"]]
    return MeasureFlow(grid, clouds, diagnostics=out["diagnostics"])


def simulate_terminal(
    model,
    init: ParticleCloud,
    grid: TimeGrid,
    seed: int,
    trunc_radius: float = DEFAULT_TRUNC_RADIUS,
    jump_cap: float = DEFAULT_JUMP_CAP,
    track_sup_V: bool = False,
    chunk: int = 4096,
    flow: MeasureFlow | None = None,
) -> dict:
    """Memory-lean run keeping only terminal states (and optionally the
    running maximum of the Lyapunov weight along each path)."""
    if flow is not None:
        mvals = [model.measure_values(c) for c in flow.clouds]
        mvals_at = lambda k, pts: mvals[k]
    else:
        mvals_at = lambda k, pts: None
    out = _run_engine(
        model,
        init.points,
        grid,
        seed,
        mvals_at=mvals_at,
        store="terminal",
        trunc_radius=trunc_radius,
        jump_cap=jump_cap,
        track_sup_V=track_sup_V,
        chunk=chunk,
    )
    return {
        "terminal": out["terminal"],
        "sup_V": out["sup_V"],
        "diagnostics": out["diagnostics"],
    }


# ---------------------------------------------------------------------------
# serialization: CSV and the binary ensemble format (magic "MVSF1")
# ---------------------------------------------------------------------------

_MAGIC_SF = b"MVSF1"


def write_ensemble(path, ens: PathEnsemble) -> None:
    """Binary layout: magic, uint32 LE (d, N, n_steps), then float64 LE:
    grid nodes, trajectories (N * (n_steps+1) * d, C order), log-weights."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC_SF)
        fh.write(struct.pack("<III", ens.dim, ens.n, ens.grid.n_steps))
        fh.write(ens.grid.nodes.astype("<f8").tobytes())
        fh.write(ens.trajectories.astype("<f8").tobytes())
        fh.write(ens.log_weights.astype("<f8").tobytes())


def read_ensemble(path) -> PathEnsemble:
    with open(path, "rb") as fh:
        if fh.read(5) != _MAGIC_SF:
            raise ValueError("not an ensemble file")
        d, n, n_steps = struct.unpack("<III", fh.read(12))
        data = np.frombuffer(fh.read(), dtype="<f8")
    nodes = data[: n_steps + 1]
    off = n_steps + 1
    traj = data[off : off + n * (n_steps + 1) * d].reshape(n, n_steps + 1, d)
    lw = data[off + n * (n_steps + 1) * d :]
    grid = TimeGrid(float(nodes[0]), float(nodes[-1]), n_steps, nodes=nodes.copy())
    return PathEnsemble(grid, traj.copy(), log_weights=lw.copy())


def ensemble_to_csv(path, ens: PathEnsemble) -> None:
    """One row per particle-time: trajectory, step, time, coordinates."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory", "step", "time"] + [f"x{j}" for j in range(ens.dim)])
        for i in range(ens.n):
            for k in range(ens.grid.n_steps + 1):
                w.writerow(
                    [i, k, repr(float(ens.grid.nodes[k]))]
                    + [repr(float(v)) for v in ens.trajectories[i, k]]
                )


def flow_to_csv(path, flow: MeasureFlow) -> None:
    """One row per particle-time with the particle weight."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "time", "particle", "weight"] + [f"x{j}" for j in range(flow.clouds[0].dim)])
        for k, cloud in enumerate(flow.clouds):
            t = float(flow.grid.nodes[k])
            for i in range(cloud.n):
                w.writerow(
                    [k, repr(t), i, repr(float(cloud.weights[i]))]
                    + [repr(float(v)) for v in cloud.points[i]]
                )
