"""Probability distances between empirical measures.

Two representations are supported.  ``DiscreteMeasure`` is a weighted atom
set on which the weighted-variation distance and the optimal-transport
distance are computed exactly.  ``HistogramMeasure`` is a binned proxy used
when comparing simulation outputs at the density level: the variation
distance between two raw N-point samples of a continuous law is ~2 almost
surely, so samples are first pooled onto a common grid.

The transport distance uses three exact routes: sorted matching (1-D, equal
counts, uniform masses), the assignment problem (equal counts, uniform
masses, any dimension) and the full transport linear program (general case).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

__all__ = [
    "DiscreteMeasure",
    "HistogramMeasure",
    "DistanceReport",
    "weighted_variation",
    "wasserstein",
    "kvar_inequality_check",
    "transport_cost",
]

LP_CAP = 10**6  # max number of coupling variables in the transport LP
MASS_TOL = 1e-9


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure: ``n`` atoms in R^d."""

    atoms: np.ndarray  # (n, d)
    masses: np.ndarray  # (n,)

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        masses = np.asarray(self.masses, dtype=float).ravel()
        if atoms.shape[0] != masses.shape[0]:
            raise MetricsError("atoms and masses disagree in length")
        if not np.isfinite(atoms).all():
            raise MetricsError("atoms must be finite")
        if (masses < -MASS_TOL).any():
            raise MetricsError("masses must be nonnegative")
        if abs(masses.sum() - 1.0) > 1e-9:
            raise MetricsError("masses must sum to 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "masses", masses)

    @property
    def n(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @classmethod
    def from_points(cls, points, masses=None) -> "DiscreteMeasure":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.ndim == 2 and points.shape[0] == 1 and points.shape[1] > 1:
            pass  # single d-dimensional atom
        if masses is None:
            masses = np.full(points.shape[0], 1.0 / points.shape[0])
        return cls(points, masses)

    @classmethod
    def dirac(cls, x) -> "DiscreteMeasure":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(x[None, :], np.array([1.0]))

    def integrate(self, h) -> float:
        vals = np.asarray(h(self.atoms), dtype=float)
        if not np.isfinite(vals).all():
            raise MetricsError("test function returned a non-finite value")
        return float(np.dot(self.masses, vals))


@dataclass(frozen=True)
class HistogramMeasure:
    """Measure binned on an axis-aligned box.

    ``cell_masses`` has one axis per dimension; mass outside the box is
    tracked in ``overflow`` so the in-box masses sum to at most 1.
    """

    box: np.ndarray  # (d, 2) lower/upper bounds
    cell_masses: np.ndarray  # resolution per axis
    overflow: float = 0.0

    def __post_init__(self):
        box = np.asarray(self.box, dtype=float).reshape(-1, 2)
        cm = np.asarray(self.cell_masses, dtype=float)
        if cm.ndim != box.shape[0]:
            raise MetricsError("cell_masses rank must equal box dimension")
        if (cm < -MASS_TOL).any() or self.overflow < -MASS_TOL:
            raise MetricsError("histogram masses must be nonnegative")
        if cm.sum() + self.overflow > 1.0 + 1e-9:
            raise MetricsError("histogram masses exceed total mass 1")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "cell_masses", cm)

    @property
    def dim(self) -> int:
        return self.box.shape[0]

    @property
    def resolution(self):
        return self.cell_masses.shape

    def centers(self) -> np.ndarray:
        """Cell centers as an array of shape (n_cells, d)."""
        axes = []
        for a in range(self.dim):
            lo, hi = self.box[a]
            r = self.cell_masses.shape[a]
            edges = np.linspace(lo, hi, r + 1)
            axes.append(0.5 * (edges[:-1] + edges[1:]))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @classmethod
    def from_sample(cls, points, weights=None, box=None, resolution=128) -> "HistogramMeasure":
        """Bin a weighted sample.  ``box`` defaults to the sample's 1-99
        percentile box, padded slightly so degenerate samples still bin."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n, d = points.shape
        if weights is None:
            weights = np.full(n, 1.0 / n)
        weights = np.asarray(weights, dtype=float)
        if box is None:
            box = percentile_box(points)
        box = np.asarray(box, dtype=float).reshape(d, 2)
        res = (resolution,) * d if np.isscalar(resolution) else tuple(resolution)
        edges = [np.linspace(box[a, 0], box[a, 1], res[a] + 1) for a in range(d)]
        inside = np.ones(n, dtype=bool)
        for a in range(d):
            inside &= (points[:, a] >= box[a, 0]) & (points[:, a] <= box[a, 1])
        cm, _ = np.histogramdd(points[inside], bins=edges, weights=weights[inside])
        return cls(box, cm, overflow=float(weights[~inside].sum()))


def percentile_box(points, lo_pct: float = 1.0, hi_pct: float = 99.0, pad: float = 1e-9) -> np.ndarray:
    """Axis-aligned percentile box of one or more pooled samples."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    lo = np.percentile(points, lo_pct, axis=0)
    hi = np.percentile(points, hi_pct, axis=0)
    width = np.maximum(hi - lo, 1e-12)
    return np.stack([lo - pad * width - 1e-12, hi + pad * width + 1e-12], axis=-1)


def common_histograms(points_a, points_b, resolution=128, weights_a=None, weights_b=None):
    """Bin two samples on the shared percentile box of their pooled points."""
    pa = np.atleast_2d(np.asarray(points_a, dtype=float))
    pb = np.atleast_2d(np.asarray(points_b, dtype=float))
    box = percentile_box(np.concatenate([pa, pb], axis=0))
    ha = HistogramMeasure.from_sample(pa, weights=weights_a, box=box, resolution=resolution)
    hb = HistogramMeasure.from_sample(pb, weights=weights_b, box=box, resolution=resolution)
    return ha, hb


def _merge_atoms(mu: DiscreteMeasure, nu: DiscreteMeasure):
    """Signed masses of mu - nu on the union support (exact atom matching)."""
    atoms = np.concatenate([mu.atoms, nu.atoms], axis=0)
    signed = np.concatenate([mu.masses, -nu.masses])
    uniq, inv = np.unique(atoms, axis=0, return_inverse=True)
    acc = np.zeros(uniq.shape[0])
    np.add.at(acc, inv.ravel(), signed)
    return uniq, acc


def weighted_variation(mu, nu, V=None) -> float:
    """V-weighted variation distance ``sup_{|f| <= V} |mu(f) - nu(f)|``.

    Equals ``int V d|mu - nu|``, computed exactly on the union support for
    discrete measures and cell-wise (V at cell centers) for histograms.
    ``V=None`` means the constant weight 1, i.e. the total variation norm.
    """
    if isinstance(mu, DiscreteMeasure) and isinstance(nu, DiscreteMeasure):
        support, signed = _merge_atoms(mu, nu)
        if V is None:
            w = np.ones(support.shape[0])
        else:
            w = np.asarray(V(support), dtype=float)
            if not np.isfinite(w).all():
                raise MetricsError("weight function non-finite on the support")
        return float(np.dot(w, np.abs(signed)))
    if isinstance(mu, HistogramMeasure) and isinstance(nu, HistogramMeasure):
        if mu.resolution != nu.resolution or not np.array_equal(mu.box, nu.box):
            raise MetricsError("histograms must share box and resolution")
        diff = np.abs(mu.cell_masses - nu.cell_masses).ravel()
        if V is None:
            w = np.ones_like(diff)
            w_over = 1.0
        else:
            w = np.asarray(V(mu.centers()), dtype=float)
            w_over = float(w.max()) if w.size else 1.0
        return float(np.dot(w, diff) + w_over * abs(mu.overflow - nu.overflow))
    raise MetricsError("mu and nu must share a representation kind")


def _cost_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure, k: float) -> np.ndarray:
    diff = mu.atoms[:, None, :] - nu.atoms[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return dist**k


def _transport_lp(cost: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Exact optimal transport cost via the HiGHS linear program solver."""
    n, m = cost.shape
    if n * m > LP_CAP:
        raise MetricsError(
            f"transport LP would have {n * m} coupling variables "
            f"(cap {LP_CAP}); subsample the measures first"
        )
    # Row-sum and column-sum constraints; one redundant row dropped.
    rows = []
    data_template = np.ones(m)
    from scipy.sparse import lil_matrix

    A = lil_matrix((n + m - 1, n * m))
    for i in range(n):
        A[i, i * m : (i + 1) * m] = data_template
    for j in range(m - 1):
        A[n + j, j::m] = np.ones(n)
    rhs = np.concatenate([a, b[:-1]])
    res = linprog(cost.ravel(), A_eq=A.tocsr(), b_eq=rhs, bounds=(0, None), method="highs")
    if not res.success:
        raise MetricsError(f"transport LP failed: {res.message}")
    return float(res.fun)


def transport_cost(mu: DiscreteMeasure, nu: DiscreteMeasure, cost: np.ndarray) -> float:
    """Minimal coupling cost ``inf_pi sum_ij pi_ij cost_ij`` for a custom
    cost matrix.  Returns ``inf`` when the cost has non-finite entries."""
    if not np.isfinite(cost).all():
        return float("inf")
    uniform = (
        mu.n == nu.n
        and np.allclose(mu.masses, 1.0 / mu.n, atol=1e-12)
        and np.allclose(nu.masses, 1.0 / nu.n, atol=1e-12)
    )
    if uniform:
        ri, ci = linear_sum_assignment(cost)
        return float(cost[ri, ci].mean())
    return _transport_lp(cost, mu.masses, nu.masses)


def wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, k: float = 2.0) -> float:
    """L^k optimal-transport distance between discrete measures.

    Exact in all branches: 1-D uniform equal-count clouds use sorted
    matching, uniform equal-count clouds in general dimension use the
    assignment solver, everything else goes through the transport LP.
    """
    if k < 1:
        raise MetricsError("order k must be >= 1")
    if mu.dim != nu.dim:
        raise MetricsError("dimension mismatch")
    uniform = (
        mu.n == nu.n
        and np.allclose(mu.masses, 1.0 / mu.n, atol=1e-12)
        and np.allclose(nu.masses, 1.0 / nu.n, atol=1e-12)
    )
    if uniform and mu.dim == 1:
        x = np.sort(mu.atoms[:, 0])
        y = np.sort(nu.atoms[:, 0])
        return float(np.mean(np.abs(x - y) ** k) ** (1.0 / k))
    cost = _cost_matrix(mu, nu, k)
    if uniform:
        ri, ci = linear_sum_assignment(cost)
        val = cost[ri, ci].mean()
    else:
        val = _transport_lp(cost, mu.masses, nu.masses)
    return float(max(val, 0.0) ** (1.0 / k))


@dataclass(frozen=True)
class DistanceReport:
    """One distance evaluation, in the CSV row shape
    (metric, k-or-V id, value, n, resolution, seed)."""

    metric: str
    weight_id: str
    value: float
    n: int
    seed: int
    resolution: int | None = None

    def to_row(self) -> dict:
        return {
            "metric": self.metric,
            "param": self.weight_id,
            "value": float(self.value),
            "n": self.n,
            "resolution": "" if self.resolution is None else self.resolution,
        }


def kvar_inequality_check(mu: DiscreteMeasure, nu: DiscreteMeasure, k: float = 2.0) -> dict:
    """Compare variation + transport^k against the (1+|x|^k)-weighted
    variation and report the ratio of the two sides.

    The comparison constant is existential; batteries of random pairs fit it
    as the maximum observed ratio.
    """
    lhs = weighted_variation(mu, nu, None) + wasserstein(mu, nu, k) ** k
    V = lambda x: 1.0 + np.linalg.norm(np.atleast_2d(x), axis=-1) ** k
    rhs = weighted_variation(mu, nu, V)
    ratio = 1.0 if (lhs == 0.0 and rhs == 0.0) else lhs / rhs
    return {"lhs": lhs, "rhs": rhs, "ratio": float(ratio)}
