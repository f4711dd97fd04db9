"""Coupled pair dynamics with a change-of-measure weight.

Two copies of one SDE are driven by shared Brownian increments.  The second
copy receives an extra drift that steers it toward the first along a
deterministic schedule vanishing at the target time, and the exponential
weight of that drift correction is accumulated so that weighted statistics of
the free copy reproduce the law of the steered one started elsewhere.

The schedule gain ``1/gamma_s`` blows up at the target time, so the last
integration step is the one whose left node is ``t - dt``; the residual gap
at ``t`` is closed statistically (weighted miss probability under grid
refinement), never by forcing states equal.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .paths import StreamKey, TimeGrid, standard_normals

__all__ = [
    "GammaSchedule",
    "DiniGate",
    "CouplingRun",
    "HypothesisViolation",
    "DegenerateSampleError",
    "gamma_schedule",
    "dini_gate",
    "psi_of",
    "psi_inverse_factory",
    "dini_partial_integrals",
    "dini_integral_diverges",
    "coupled_simulate",
    "coupled_batch",
    "coupling_success",
    "write_coupling_batch",
    "read_coupling_batch",
    "write_coupling_summary",
]

COUPLING_SUBSTREAM = 3


class HypothesisViolation(ValueError):
    """A model or modulus fails a structural requirement."""


class DegenerateSampleError(RuntimeError):
    """All coupling runs were truncated; no usable sample remains."""


# ---------------------------------------------------------------------------
# steering schedule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GammaSchedule:
    """Steering schedule ``gamma_s = (1 - exp(K (s - t))) / K`` on [0, t].

    Satisfies ``K * gamma_s - 2 - gamma'_s = -1`` identically and is bounded
    between ``(t - s) / K1`` and ``K1 * (t - s)``.
    """

    K: float
    t: float

    def __post_init__(self):
        if self.K <= 0 or self.t <= 0:
            raise ValueError("need K > 0 and t > 0")

    def gamma(self, s):
        s = np.asarray(s, dtype=float)
        return (1.0 - np.exp(self.K * (s - self.t))) / self.K

    def gamma_prime(self, s):
        s = np.asarray(s, dtype=float)
        return -np.exp(self.K * (s - self.t))

    @property
    def K1(self) -> float:
        """Linear-bound constant: gamma is within [u/K1, K1*u] for u = t-s."""
        return max(1.0, float(np.exp(self.K * self.t))) * 1.01

    def identity_residual(self, s):
        """Residual of ``K*gamma - 2 - gamma' + 1``; zero in exact arithmetic."""
        return self.K * self.gamma(s) - 2.0 - self.gamma_prime(s) + 1.0


def gamma_schedule(K: float, t: float) -> GammaSchedule:
    return GammaSchedule(K, t)


# ---------------------------------------------------------------------------
# continuity-modulus machinery
# ---------------------------------------------------------------------------


def psi_of(phi):
    """Return ``psi(r) = r^2 / phi(r)^2`` for a continuity modulus ``phi``."""

    def psi(r):
        r = np.asarray(r, dtype=float)
        p = np.asarray(phi(r), dtype=float)
        out = np.zeros_like(r, dtype=float)
        pos = r > 0
        out[pos] = r[pos] ** 2 / p[pos] ** 2
        return out if out.ndim else float(out)

    return psi


def _check_psi_monotone(psi, r_lo=1e-10, r_hi=1e4, n=400, rel_tol=1e-9):
    r = np.geomspace(r_lo, r_hi, n)
    v = np.asarray(psi(r), dtype=float)
    if not np.isfinite(v).all():
        raise HypothesisViolation("psi non-finite on the sampled range")
    drops = np.diff(v) < -rel_tol * np.maximum(np.abs(v[1:]), 1e-300)
    flat = np.isclose(v.max(), v.min(), rtol=1e-12)
    if drops.any() or flat:
        raise HypothesisViolation(
            "psi(r) = r^2/phi(r)^2 is not strictly increasing on the sampled "
            "range; the steering construction needs an invertible psi"
        )
    return r, v


def psi_inverse_factory(psi, n_iter: int = 80, r_cap: float = 1e12):
    """Inverse of a monotone ``psi`` by bisection (``n_iter`` halvings)."""

    def psi_inv(u):
        u_arr = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.zeros_like(u_arr)
        pos = u_arr > 0
        if pos.any():
            target = u_arr[pos]
            hi = np.ones_like(target)
            for _ in range(100):
                todo = np.asarray(psi(hi)) < target
                if not todo.any():
                    break
                hi[todo] = np.minimum(hi[todo] * 4.0, r_cap)
            lo = np.zeros_like(target)
            for _ in range(n_iter):
                mid = 0.5 * (lo + hi)
                below = np.asarray(psi(mid)) < target
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            out[pos] = 0.5 * (lo + hi)
        return out if np.ndim(u) else float(out[0])

    return psi_inv


def dini_partial_integrals(phi, k_range=range(2, 13)):
    """Partial integrals ``I_k = int_{10^-k}^{1} (phi o psi^{-1})^2(s)/s ds``.

    The sequence plateaus when the full integral converges and keeps growing
    when it diverges.
    """
    psi = psi_of(phi)
    _check_psi_monotone(psi)
    psi_inv = psi_inverse_factory(psi)

    def integrand(w):  # s = exp(-w) substitution flattens the 1/s factor
        s = np.exp(-w)
        val = phi(np.asarray(psi_inv(s)))
        return float(val) ** 2

    out = []
    prev_w = 0.0
    total = 0.0
    for k in k_range:
        w_hi = k * np.log(10.0)
        piece, _ = quad(integrand, prev_w, w_hi, limit=200)
        total += piece
        out.append(total)
        prev_w = w_hi
    return np.asarray(out)


def tail_decay_slope(partials) -> float:
    """Log-log decay rate of the per-decade increments of the partial
    integrals.  A convergent integral has increments dying faster than 1/k
    (slope < -1); a log-divergent one has increments ~ 1/k (slope ~ -1)."""
    partials = np.asarray(partials, dtype=float)
    d = np.maximum(np.diff(partials), 1e-300)
    k = np.arange(2, len(partials) + 1)[-len(d) :][-6:]
    return float(np.polyfit(np.log(k.astype(float)), np.log(d[-6:]), 1)[0])


DIVERGENCE_SLOPE = -1.25


def dini_integral_diverges(phi) -> bool:
    """Divergence proxy: per-decade increments decay no faster than ~1/k."""
    return tail_decay_slope(dini_partial_integrals(phi)) > DIVERGENCE_SLOPE


@dataclass
class DiniGate:
    """Integrability gate for the coupling argument.

    ``g(t, s) = K * (phi o psi^{-1})^2(2 K gamma_s) / gamma_s`` must have a
    finite time integral uniformly in the target time; ``c1`` estimates that
    supremum.
    """

    phi: object
    K: float
    t_max: float
    psi: object
    psi_inv: object
    c1: float
    c1_refinements: np.ndarray
    dini_integral_finite: bool
    dini_partials: np.ndarray = field(repr=False, default=None)

    def g(self, t: float, s):
        sched = GammaSchedule(self.K, t)
        gam = np.asarray(sched.gamma(s), dtype=float)
        gam = np.maximum(gam, 1e-300)
        val = self.phi(np.asarray(self.psi_inv(2.0 * self.K * gam)))
        return self.K * np.asarray(val, dtype=float) ** 2 / gam

    def gate_integral(self, t: float, n_panels: int = 4096) -> float:
        return _gate_integral(self.phi, self.psi_inv, self.K, t, n_panels)


def _gate_integral(phi, psi_inv, K, t, n_panels) -> float:
    """Integral of the gate over [0, t] via the substitution u = gamma_s.

    d u = (K u - 1) ds turns the integral into
    ``int_0^{gamma_0} K (phi o psi^{-1})^2(2Ku) / (u (1 - Ku)) du``
    whose endpoint singularity at u = 0 is integrable; a log-spaced
    trapezoid rule resolves it.
    """
    gamma0 = (1.0 - np.exp(-K * t)) / K
    if n_panels % 2:
        n_panels += 1
    w = np.linspace(np.log(gamma0) - 36.0, np.log(gamma0), n_panels + 1)
    u = np.exp(w)
    vals = np.asarray(phi(np.asarray(psi_inv(2.0 * K * u))), dtype=float) ** 2
    integrand = K * vals / (1.0 - K * u)  # the 1/u cancels against du = u dw
    h = w[1] - w[0]
    weights = np.ones(n_panels + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(weights, integrand))


def dini_gate(phi, K: float, t: float, quad_tol: float = 1e-4) -> DiniGate:
    """Build the integrability gate for modulus ``phi`` and drift constant K.

    Raises ``HypothesisViolation`` when ``psi`` is not invertible (e.g. a
    Lipschitz modulus ``phi(r) = r``).  A divergent modulus integral is
    reported through ``dini_integral_finite`` rather than an exception.
    """
    if K <= 0 or t <= 0:
        raise ValueError("need K > 0 and t > 0")
    psi = psi_of(phi)
    _check_psi_monotone(psi)
    psi_inv = psi_inverse_factory(psi)

    partials = dini_partial_integrals(phi)
    finite = bool(tail_decay_slope(partials) <= DIVERGENCE_SLOPE)

    c1 = float("nan")
    refinements = np.array([])
    if finite:
        t_samples = np.geomspace(max(t * 1e-2, 1e-4), t, 8)
        ladders = []
        for n_panels in (256, 512, 1024, 2048, 4096, 8192):
            est = max(_gate_integral(phi, psi_inv, K, ts, n_panels) for ts in t_samples)
            ladders.append(est)
            if len(ladders) >= 2 and abs(ladders[-1] - ladders[-2]) <= quad_tol * abs(ladders[-1]):
                break
        refinements = np.asarray(ladders)
        c1 = refinements[-1]

    return DiniGate(
        phi=phi,
        K=K,
        t_max=t,
        psi=psi,
        psi_inv=psi_inv,
        c1=c1,
        c1_refinements=refinements,
        dini_integral_finite=finite,
        dini_partials=partials,
    )


# ---------------------------------------------------------------------------
# coupled simulation
# ---------------------------------------------------------------------------


@dataclass
class CouplingRun:
    """One coupled trajectory pair and its reweighting diagnostics."""

    x: np.ndarray
    y: np.ndarray
    t: float
    dt: float
    terminal_gap: float
    log_weight: float
    gap_integral: float  # int_0^t |X-Y|^2 / gamma^2 ds (left-node rule)
    trunc_index: int | None = None
    paths: dict | None = None

    @property
    def weight(self) -> float:
        return float(np.exp(self.log_weight))

    @property
    def truncated(self) -> bool:
        return self.trunc_index is not None


def _model_dims(model):
    return int(model.dim), int(model.bm_dim)


def _classical_drift(model, t, x):
    return model.drift(t, x, None)


def _steering(model, t, x, z, gam):
    """xi = sigma^T (sigma sigma^T)^{-1}(x) z / gamma, vectorized over rows."""
    sig = model.sigma(t, x)
    d, m = sig.shape[1], sig.shape[2]
    if d == 1 and m == 1:
        s = sig[:, 0, 0]
        if (s == 0).any():
            raise HypothesisViolation("diffusion vanished at a visited point")
        return (z[:, 0] / (s * gam))[:, None], sig
    a = np.einsum("ndm,nem->nde", sig, sig)
    try:
        w = np.linalg.solve(a, z[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise HypothesisViolation("sigma sigma^T singular at a visited point") from exc
    return np.einsum("ndm,nd->nm", sig, w) / gam, sig


def coupled_batch(
    model,
    x,
    y,
    t: float,
    grid: TimeGrid,
    seed: int,
    n_runs: int,
    trunc_radius: float = 1e6,
    chunk: int = 1024,
    keep_paths: bool = False,
):
    """Run ``n_runs`` independent coupled pairs; returns a list of runs.

    Run ``i`` draws its increments from the stream keyed by
    ``(seed, trajectory_id=i)``, so results do not depend on chunking.
    """
    if not getattr(model, "coupling_ready", False):
        raise HypothesisViolation(
            f"model {getattr(model, 'name', '?')} is not certified for coupling"
        )
    d, m = _model_dims(model)
    x = np.broadcast_to(np.atleast_1d(np.asarray(x, dtype=float)), (d,))
    y = np.broadcast_to(np.atleast_1d(np.asarray(y, dtype=float)), (d,))
    j = grid.node_index(t)
    if j < 2:
        raise ValueError("need at least two steps before the target time")
    nodes = grid.nodes[: j + 1]
    sched = GammaSchedule(model.K, t)

    runs: list[CouplingRun] = []
    for start in range(0, n_runs, chunk):
        ids = np.arange(start, min(start + chunk, n_runs))
        runs.extend(
            _coupled_chunk(model, x, y, t, nodes, sched, seed, ids, trunc_radius, keep_paths, m, d)
        )
    return runs


def _coupled_chunk(model, x, y, t, nodes, sched, seed, ids, trunc_radius, keep_paths, m, d):
    c = len(ids)
    n_steps = len(nodes) - 1
    dW = np.empty((c, n_steps, m))
    for row, rid in enumerate(ids):
        key = StreamKey(seed, int(rid), COUPLING_SUBSTREAM)
        z = standard_normals(key, (n_steps, m))
        dW[row] = z * np.sqrt(np.diff(nodes))[:, None]

    X = np.tile(x, (c, 1))
    Y = np.tile(y, (c, 1))
    log_w = np.zeros(c)
    gap_int = np.zeros(c)
    active = np.ones(c, dtype=bool)
    trunc_at = np.full(c, -1, dtype=np.int64)

    record = keep_paths
    if record:
        Xp = np.empty((c, n_steps + 1, d))
        Yp = np.empty((c, n_steps + 1, d))
        xi_norm = np.zeros((c, n_steps + 1))
        logw_path = np.zeros((c, n_steps + 1))
        Xp[:, 0] = X
        Yp[:, 0] = Y

    for k in range(n_steps):
        s_k = nodes[k]
        dt = nodes[k + 1] - nodes[k]
        gam = float(sched.gamma(s_k))
        z = X - Y
        xi, sig_x = _steering(model, s_k, X, z, gam)
        sig_y = model.sigma(s_k, Y)
        bX = _classical_drift(model, s_k, X)
        bY = _classical_drift(model, s_k, Y)
        w_k = dW[:, k, :]

        X_new = X + bX * dt + np.einsum("ndm,nm->nd", sig_x, w_k)
        Y_new = Y + (bY + np.einsum("ndm,nm->nd", sig_y, xi)) * dt + np.einsum(
            "ndm,nm->nd", sig_y, w_k
        )
        xi_sq = np.einsum("nm,nm->n", xi, xi)
        lw_new = log_w - np.einsum("nm,nm->n", xi, w_k) - 0.5 * xi_sq * dt
        gap_sq = np.einsum("nd,nd->n", z, z)
        gi_new = gap_int + gap_sq / gam**2 * dt

        mask = active[:, None]
        X = np.where(mask, X_new, X)
        Y = np.where(mask, Y_new, Y)
        log_w = np.where(active, lw_new, log_w)
        gap_int = np.where(active, gi_new, gap_int)

        blown = active & (
            (np.linalg.norm(X, axis=1) >= trunc_radius)
            | (np.linalg.norm(Y, axis=1) >= trunc_radius)
            | ~np.isfinite(X).all(axis=1)
            | ~np.isfinite(Y).all(axis=1)
        )
        trunc_at[blown] = k + 1
        active &= ~blown

        if record:
            Xp[:, k + 1] = X
            Yp[:, k + 1] = Y
            xi_norm[:, k + 1] = np.sqrt(xi_sq)
            logw_path[:, k + 1] = log_w

    gaps = np.linalg.norm(X - Y, axis=1)
    dt0 = nodes[1] - nodes[0]
    out = []
    for row, rid in enumerate(ids):
        paths = None
        if record:
            paths = {
                "nodes": nodes.copy(),
                "X": Xp[row],
                "Y": Yp[row],
                "xi_norm": xi_norm[row],
                "log_weight": logw_path[row],
            }
        out.append(
            CouplingRun(
                x=x.copy(),
                y=y.copy(),
                t=float(t),
                dt=float(dt0),
                terminal_gap=float(gaps[row]),
                log_weight=float(log_w[row]),
                gap_integral=float(gap_int[row]),
                trunc_index=int(trunc_at[row]) if trunc_at[row] >= 0 else None,
                paths=paths,
            )
        )
    return out


def coupled_simulate(
    model,
    x,
    y,
    t: float,
    grid: TimeGrid,
    seed: int,
    trunc_radius: float = 1e6,
    run_id: int = 0,
) -> CouplingRun:
    """Simulate a single coupled pair, keeping the full paths."""
    runs = coupled_batch(
        model,
        x,
        y,
        t,
        grid,
        seed,
        n_runs=run_id + 1,
        trunc_radius=trunc_radius,
        keep_paths=True,
        chunk=run_id + 1,
    )
    return runs[run_id]


def coupling_success(runs, delta: float, lam: float | None = None) -> dict:
    """Weighted meeting statistics for a batch of coupling runs.

    Returns the weight-normalized miss probability ``P(gap > delta)`` under
    the reweighted law and the weighted exponential moment of
    ``lam * int gap^2/gamma^2 ds`` (default ``lam = 1/(2 K^2)`` is inferred
    from the runs only through the caller-supplied value).
    """
    runs = list(runs)
    if not runs:
        raise ValueError("empty run batch")
    usable = [r for r in runs if not r.truncated]
    if not usable:
        raise DegenerateSampleError("all coupling runs were truncated")
    w = np.array([r.weight for r in usable])
    gaps = np.array([r.terminal_gap for r in usable])
    gi = np.array([r.gap_integral for r in usable])
    if lam is None:
        lam = 0.5
    wsum = w.sum()
    miss = float(np.dot(w, gaps > delta) / wsum)
    with np.errstate(over="ignore"):
        expmom = float(np.dot(w, np.exp(lam * gi)) / wsum)
    return {
        "miss_probability": miss,
        "exp_moment": expmom,
        "lambda": float(lam),
        "mean_weight": float(np.mean([r.weight for r in runs])),
        "n_runs": len(runs),
        "n_truncated": len(runs) - len(usable),
        "any_truncated": len(usable) < len(runs),
    }


def write_coupling_summary(path, entries) -> None:
    """Summary CSV with columns (x, y, t, dt, N, miss_prob, expmoment,
    fitted_c); one row per batch configuration."""
    import csv

    fields = ["x", "y", "t", "dt", "N", "miss_prob", "expmoment", "fitted_c"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for e in entries:
            w.writerow({k: repr(float(e[k])) if isinstance(e[k], float) else e[k] for k in fields})


# ---------------------------------------------------------------------------
# batch serialization (magic "MVCR1"; little-endian)
# ---------------------------------------------------------------------------

_MAGIC_CR = b"MVCR1"


def write_coupling_batch(path, runs) -> None:
    """Binary batch format: magic, uint32 (d, n_runs), then per run the
    doubles ``x[0:d], y[0:d], t, dt, terminal_gap, log_weight, gap_integral,
    trunc_index`` (-1 when not truncated)."""
    runs = list(runs)
    d = len(runs[0].x)
    with open(path, "wb") as fh:
        fh.write(_MAGIC_CR)
        fh.write(struct.pack("<II", d, len(runs)))
        for r in runs:
            rec = np.concatenate(
                [
                    np.asarray(r.x, dtype=float),
                    np.asarray(r.y, dtype=float),
                    [
                        r.t,
                        r.dt,
                        r.terminal_gap,
                        r.log_weight,
                        r.gap_integral,
                        -1.0 if r.trunc_index is None else float(r.trunc_index),
                    ],
                ]
            )
            fh.write(rec.astype("<f8").tobytes())


def read_coupling_batch(path):
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != _MAGIC_CR:
            raise ValueError("not a coupling batch file")
        d, n = struct.unpack("<II", fh.read(8))
        rec_len = 2 * d + 6
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(n, rec_len)
    runs = []
    for row in data:
        ti = int(row[2 * d + 5])
        runs.append(
            CouplingRun(
                x=row[:d].copy(),
                y=row[d : 2 * d].copy(),
                t=float(row[2 * d]),
                dt=float(row[2 * d + 1]),
                terminal_gap=float(row[2 * d + 2]),
                log_weight=float(row[2 * d + 3]),
                gap_integral=float(row[2 * d + 4]),
                trunc_index=None if ti < 0 else ti,
            )
        )
    return runs
