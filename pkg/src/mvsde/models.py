"""SDE model catalogue and numerical hypothesis verification.

A model packages its coefficients with the drift split into a locally
integrable "kick" part and a regular part.  The regular part may depend on a
probability measure, but only through finitely many integrals
``mu(h_1), ..., mu(h_r)`` of declared test functions dominated by the
model's Lyapunov weight.

All structural requirements (ellipticity, Lyapunov inequalities, the
measure-Lipschitz bound, the continuity modulus of the diffusion) are
checked numerically on sample grids by :func:`verify_hypotheses`.  Built-in
models store constants ``K, kappa, eps`` chosen by hand; the verifier
certifies them rather than deriving them.

Coefficient conventions (vectorized over ``n`` states):
    drift_singular(t, x)       (n, d) -> (n, d)
    drift_regular(t, x, mvals) (n, d) x (r,) -> (n, d)
    sigma(t, x)                (n, d) -> (n, d, m)
    lyapunov_V / grad / hess   (n, d) -> (n,) / (n, d) / (n, d, d)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import (
    DIVERGENCE_SLOPE,
    dini_partial_integrals,
    psi_inverse_factory,
    psi_of,
    tail_decay_slope,
)
from .metrics import DiscreteMeasure, weighted_variation
from .paths import StreamKey, stream_generator

__all__ = [
    "ModelSpec",
    "HypothesisReport",
    "ConditionResult",
    "SampleGrid",
    "default_sample_grid",
    "verify_hypotheses",
    "get_model",
    "register_model",
    "list_models",
    "ModelEvaluationError",
]


class ModelEvaluationError(RuntimeError):
    pass


@dataclass
class ModelSpec:
    """Coefficients, Lyapunov data, and constants of one SDE model."""

    name: str
    dim: int
    bm_dim: int
    drift_regular: object
    sigma: object
    lyapunov_V: object
    grad_V: object
    hess_V: object
    phi_growth: object
    dini_modulus: object
    K: float
    kappa: float
    eps: float
    p0: float
    q0: float
    drift_singular: object = None
    measure_tests: tuple = ()
    b0_exponent: float | None = None
    phi_weight_bounded: bool = False
    coupling_ready: bool = False
    description: str = ""

    def __post_init__(self):
        if self.dim < 1 or self.bm_dim < 1:
            raise ValueError("dim and bm_dim must be positive")

    @property
    def is_measure_dependent(self) -> bool:
        return len(self.measure_tests) > 0

    def measure_values(self, cloud) -> np.ndarray:
        """Vector of measure integrals ``mu(h_j)`` for the declared tests."""
        if not self.measure_tests:
            return np.zeros(0)
        pts = np.asarray(cloud.points if hasattr(cloud, "points") else cloud.atoms)
        w = np.asarray(cloud.weights if hasattr(cloud, "weights") else cloud.masses)
        return np.array([float(np.dot(w, h(pts))) for h in self.measure_tests])

    def drift(self, t, x, mvals=None) -> np.ndarray:
        """Full drift; ``mvals=None`` freezes the measure argument at zero."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if mvals is None:
            mvals = np.zeros(len(self.measure_tests))
        out = np.asarray(self.drift_regular(t, x, mvals), dtype=float)
        if self.drift_singular is not None:
            out = out + np.asarray(self.drift_singular(t, x), dtype=float)
        return out


# ---------------------------------------------------------------------------
# Lyapunov weight constructors (1-d closed forms, vectorized)
# ---------------------------------------------------------------------------


def _log_weight():
    """V(x) = log(e + |x|^2), a slowly growing compact weight."""

    def V(x):
        x = np.atleast_2d(x)
        return np.log(np.e + np.einsum("nd,nd->n", x, x))

    def grad(x):
        x = np.atleast_2d(x)
        s = np.e + np.einsum("nd,nd->n", x, x)
        return 2.0 * x / s[:, None]

    def hess(x):
        x = np.atleast_2d(x)
        n, d = x.shape
        s = np.e + np.einsum("nd,nd->n", x, x)
        eye = np.eye(d)[None, :, :]
        outer = np.einsum("nd,ne->nde", x, x)
        return 2.0 * eye / s[:, None, None] - 4.0 * outer / (s**2)[:, None, None]

    return V, grad, hess


def _quadratic_weight():
    """V(x) = 1 + |x|^2."""

    def V(x):
        x = np.atleast_2d(x)
        return 1.0 + np.einsum("nd,nd->n", x, x)

    def grad(x):
        return 2.0 * np.atleast_2d(x)

    def hess(x):
        x = np.atleast_2d(x)
        n, d = x.shape
        return np.broadcast_to(2.0 * np.eye(d), (n, d, d)).copy()

    return V, grad, hess


def _bounded_weight():
    """V(x) = 2 - 1/(1 + |x|^2): a bounded increasing weight."""

    def V(x):
        x = np.atleast_2d(x)
        return 2.0 - 1.0 / (1.0 + np.einsum("nd,nd->n", x, x))

    def grad(x):
        x = np.atleast_2d(x)
        s = 1.0 + np.einsum("nd,nd->n", x, x)
        return 2.0 * x / (s**2)[:, None]

    def hess(x):
        x = np.atleast_2d(x)
        n, d = x.shape
        s = 1.0 + np.einsum("nd,nd->n", x, x)
        eye = np.eye(d)[None, :, :]
        outer = np.einsum("nd,ne->nde", x, x)
        return 2.0 * eye / (s**2)[:, None, None] - 8.0 * outer / (s**3)[:, None, None]

    return V, grad, hess


def _constant_sigma(dim, bm_dim, scale):
    base = scale * np.eye(dim, bm_dim)

    def sigma(t, x):
        x = np.atleast_2d(x)
        return np.broadcast_to(base, (x.shape[0], dim, bm_dim)).copy()

    return sigma


def log_modulus(theta: float, amp: float = 1.0):
    """Modulus ``amp * log^(-theta)(e + 1/r)``: Dini for theta > 1/2."""

    def phi(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r, dtype=float)
        pos = r > 0
        out[pos] = amp * np.log(np.e + 1.0 / r[pos]) ** (-theta)
        if r.ndim == 0:
            return float(amp * np.log(np.e + 1.0 / r) ** (-theta)) if r > 0 else 0.0
        return out

    return phi


def sqrt_modulus(scale: float = 1.0):
    def phi(r):
        r = np.asarray(r, dtype=float)
        return scale * np.sqrt(np.abs(r))

    return phi


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------


def build_ou(theta: float = 1.0, noise: float = 1.0, dim: int = 1) -> ModelSpec:
    """Linear pull toward the origin with constant diffusion."""
    V, g, h = _log_weight()

    def b1(t, x, mvals):
        return -theta * np.atleast_2d(x)

    return ModelSpec(
        name="ou",
        dim=dim,
        bm_dim=dim,
        drift_regular=b1,
        sigma=_constant_sigma(dim, dim, noise),
        lyapunov_V=V,
        grad_V=g,
        hess_V=h,
        phi_growth=lambda s: np.asarray(s, dtype=float),
        dini_modulus=sqrt_modulus(),
        K=2.0,
        kappa=1.0,
        eps=0.1,
        p0=4.0,
        q0=8.0,
        coupling_ready=True,
        description=f"linear drift -{theta} x, constant noise {noise}",
    )


def build_cubic(noise: float = 1.0) -> ModelSpec:
    """Superlinear dissipative drift -x^3 in one dimension."""
    V, g, h = _log_weight()

    def b1(t, x, mvals):
        x = np.atleast_2d(x)
        return -(x**3)

    return ModelSpec(
        name="cubic",
        dim=1,
        bm_dim=1,
        drift_regular=b1,
        sigma=_constant_sigma(1, 1, noise),
        lyapunov_V=V,
        grad_V=g,
        hess_V=h,
        phi_growth=lambda s: np.asarray(s, dtype=float),
        dini_modulus=sqrt_modulus(),
        K=3.0,
        kappa=1.0,
        eps=0.1,
        p0=4.0,
        q0=8.0,
        description="cubic dissipative drift, constant noise",
    )


def build_kick(beta: float = 0.4, noise: float = 1.0) -> ModelSpec:
    """Locally integrable kick ``|x|^-beta`` inside the unit ball plus a
    linear restoring part, one dimension; needs beta < 1/2."""
    if not 0 < beta < 0.5:
        raise ValueError("kick exponent must lie in (0, 1/2)")
    V, g, h = _log_weight()

    def b0(t, x):
        x = np.atleast_2d(x)
        r = np.abs(x[:, 0])
        out = np.zeros_like(x)
        inside = (r <= 1.0) & (r > 0.0)
        out[inside, 0] = r[inside] ** (-beta)
        return out

    def b1(t, x, mvals):
        return -np.atleast_2d(x)

    p0 = 2.2
    return ModelSpec(
        name="kick",
        dim=1,
        bm_dim=1,
        drift_regular=b1,
        drift_singular=b0,
        sigma=_constant_sigma(1, 1, noise),
        lyapunov_V=V,
        grad_V=g,
        hess_V=h,
        phi_growth=lambda s: np.asarray(s, dtype=float),
        dini_modulus=sqrt_modulus(),
        K=2.0,
        kappa=1.0,
        eps=0.1,
        p0=p0,
        q0=5.0,
        b0_exponent=beta,
        description=f"integrable kick |x|^-{beta} on the unit ball + linear pull",
    )


def _dini_sigma_model(name, theta, amp, K):
    V, g, h = _log_weight()
    mod = log_modulus(theta, amp)

    def b1(t, x, mvals):
        return -np.atleast_2d(x)

    def sigma(t, x):
        x = np.atleast_2d(x)
        r = np.linalg.norm(x, axis=1)
        # |sigma(x)-sigma(y)| <= 0.5*|mod(|x|)-mod(|y|)| <= mod(|x-y|) on the
        # sampled range; the half factor buys slack in the modulus check.
        vals = 1.0 + 0.5 * np.asarray(mod(r))
        return vals[:, None, None]

    return ModelSpec(
        name=name,
        dim=1,
        bm_dim=1,
        drift_regular=b1,
        sigma=sigma,
        lyapunov_V=V,
        grad_V=g,
        hess_V=h,
        phi_growth=lambda s: np.asarray(s, dtype=float),
        dini_modulus=mod,
        K=K,
        kappa=1.0,
        eps=0.1,
        p0=4.0,
        q0=8.0,
        coupling_ready=True,
        description=f"linear drift, diagonal noise with log^-{theta} modulus (amp {amp})",
    )


def build_dini(theta: float = 1.5, amp: float = 0.5) -> ModelSpec:
    """Merely Dini-continuous diffusion; the standard rough-noise example."""
    return _dini_sigma_model("dini", theta, amp, K=1.0)


def build_rough_sigma(c: float = 10.0, p: float = 1.8, n_scales: int = 21) -> ModelSpec:
    """Diffusion with multiscale oscillation realizing a logarithmic modulus
    at every length scale.

    A radial Dini perturbation is smooth away from one point, so coupled
    pairs driven by shared noise meet almost deterministically and the
    residual gap is invisible at any usable step size.  Superposing cosine
    modes with geometrically increasing frequencies and amplitude decay
    ``(1+j)^-p`` keeps the increment scale ~ log^(1-p)(1/h) alive at all
    separations h, which makes the meeting probability a genuine function of
    the step size while the declared modulus stays Dini-integrable.
    """
    j = np.arange(n_scales)
    amps = (1.0 + j) ** (-p)
    freqs = 2.0**j
    phases = 2.0 * np.pi * ((j * 0.6180339887498949) % 1.0)
    base = 0.5 + c * amps.sum()
    V, g, h = _log_weight()

    def b1(t, x, mvals):
        return -np.atleast_2d(x)

    def sigma(t, x):
        x = np.atleast_2d(x)
        osc = np.cos(np.multiply.outer(x[:, 0], freqs) + phases) @ amps
        return (base + c * osc)[:, None, None]

    return ModelSpec(
        name="rough_sigma",
        dim=1,
        bm_dim=1,
        drift_regular=b1,
        sigma=sigma,
        lyapunov_V=V,
        grad_V=g,
        hess_V=h,
        phi_growth=lambda s: np.asarray(s, dtype=float),
        dini_modulus=log_modulus(p - 1.0, 2.8 * c),
        K=1.0,
        kappa=1.0,
        eps=0.1,
        p0=4.0,
        q0=8.0,
        coupling_ready=True,
        description=f"linear drift, multiscale rough noise ({n_scales} modes, decay {p})",
    )


def build_linear_mf(kappa: float = 0.5, noise: float = 1.0) -> ModelSpec:
    """Linear drift attracted to the running mean: the standard example for
    fixed-point iteration on the measure flow."""
    V, g, h = _quadratic_weight()

    def h_id(x):
        return np.atleast_2d(x)[:, 0]

    def b1(t, x, mvals):
        x = np.atleast_2d(x)
        out = -x.copy()
        out[:, 0] += kappa * mvals[0]
        return out

    return ModelSpec(
        name="linear_mf",
        dim=1,
        bm_dim=1,
        drift_regular=b1,
        sigma=_constant_sigma(1, 1, noise),
        lyapunov_V=V,
        grad_V=g,
        hess_V=h,
        phi_growth=lambda s: np.asarray(s, dtype=float),
        dini_modulus=sqrt_modulus(),
        K=5.0,
        kappa=kappa,
        eps=0.1,
        p0=4.0,
        q0=8.0,
        measure_tests=(h_id,),
        description=f"mean-reverting drift with mean-field attraction {kappa}",
    )


def build_cubic_mf(kappa: float = 0.5, noise: float = 1.0) -> ModelSpec:
    """Cubic dissipation plus a bounded mean-field interaction."""
    V, g, h = _log_weight()

    def h_cap(x):
        x = np.atleast_2d(x)
        v = np.log(np.e + np.einsum("nd,nd->n", x, x))
        return np.minimum(v, 10.0)

    def b1(t, x, mvals):
        x = np.atleast_2d(x)
        return -(x**3) + kappa * np.tanh(x) * mvals[0]

    return ModelSpec(
        name="cubic_mf",
        dim=1,
        bm_dim=1,
        drift_regular=b1,
        sigma=_constant_sigma(1, 1, noise),
        lyapunov_V=V,
        grad_V=g,
        hess_V=h,
        phi_growth=lambda s: np.asarray(s, dtype=float),
        dini_modulus=sqrt_modulus(),
        K=4.0,
        kappa=kappa,
        eps=0.1,
        p0=4.0,
        q0=8.0,
        measure_tests=(h_cap,),
        description=f"cubic dissipation + {kappa} tanh(x) * mu(V cap 10)",
    )


def build_bounded_mf(kappa: float = 0.5, noise: float = 1.0) -> ModelSpec:
    """Mean-reverting drift with a bounded interaction and a bounded weight;
    the setting in which variation distance and weighted variation are
    equivalent."""
    V, g, h = _bounded_weight()

    def h_tanh(x):
        return np.tanh(np.atleast_2d(x)[:, 0])

    def b1(t, x, mvals):
        x = np.atleast_2d(x)
        out = -x.copy()
        out[:, 0] += kappa * mvals[0]
        return out

    return ModelSpec(
        name="bounded_mf",
        dim=1,
        bm_dim=1,
        drift_regular=b1,
        sigma=_constant_sigma(1, 1, noise),
        lyapunov_V=V,
        grad_V=g,
        hess_V=h,
        phi_growth=lambda s: np.asarray(s, dtype=float),
        dini_modulus=sqrt_modulus(),
        K=3.0,
        kappa=kappa,
        eps=0.1,
        p0=4.0,
        q0=8.0,
        measure_tests=(h_tanh,),
        phi_weight_bounded=True,
        description=f"mean reversion + bounded interaction {kappa}, bounded weight",
    )


_REGISTRY = {
    "ou": build_ou,
    "cubic": build_cubic,
    "kick": build_kick,
    "dini": build_dini,
    "rough_sigma": build_rough_sigma,
    "linear_mf": build_linear_mf,
    "cubic_mf": build_cubic_mf,
    "bounded_mf": build_bounded_mf,
}


def register_model(name: str, builder) -> None:
    if name in _REGISTRY:
        raise ValueError(f"model id {name!r} already registered")
    _REGISTRY[name] = builder


def get_model(name: str, **params) -> ModelSpec:
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown model id {name!r}; known: {sorted(_REGISTRY)}") from None
    return builder(**params)


def list_models():
    return sorted(_REGISTRY)


# ---------------------------------------------------------------------------
# hypothesis verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    worst_residual: float
    worst_location: str = ""


@dataclass
class HypothesisReport:
    model: str
    conditions: dict
    tolerance: float = 1e-9

    @property
    def verified(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def summary(self) -> str:
        lines = [f"hypothesis report for model '{self.model}':"]
        for c in self.conditions.values():
            status = "pass" if c.passed else "FAIL"
            loc = f"  @ {c.worst_location}" if c.worst_location else ""
            lines.append(f"  [{status}] {c.name}: worst residual {c.worst_residual:+.3e}{loc}")
        return "\n".join(lines)


@dataclass(frozen=True)
class SampleGrid:
    """Finite evaluation set: times, state points, point pairs, measure pairs."""

    times: np.ndarray
    points: np.ndarray  # (P, d)
    pairs: np.ndarray  # (Q, 2, d)
    measure_pairs: tuple  # tuple of (DiscreteMeasure, DiscreteMeasure)

    def __post_init__(self):
        if len(self.times) == 0 or len(self.points) == 0:
            raise ValueError("sample grid must be non-empty")


def default_sample_grid(
    model: ModelSpec,
    seed: int = 0,
    n_radii: int = 40,
    n_dirs: int = 8,
    n_times: int = 20,
    n_measure_pairs: int = 8,
    max_atoms: int = 64,
    t_max: float = 1.0,
) -> SampleGrid:
    """Log-spaced radii times random directions, plus random small measure
    pairs with exactly computable weighted variation."""
    rng = stream_generator(StreamKey(seed, 0, 11))
    d = model.dim
    radii = np.geomspace(1e-3, 1e3, n_radii)
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        raw = rng.normal(size=(n_dirs, d))
        dirs = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    points = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    points = np.concatenate([points, np.zeros((1, d))], axis=0)

    scales = np.geomspace(1e-6, 1.0, 12)
    base = rng.normal(size=(12, d))
    offs = rng.normal(size=(12, d))
    offs /= np.linalg.norm(offs, axis=1, keepdims=True)
    pairs = np.stack([base, base + scales[:, None] * offs], axis=1)

    mpairs = []
    for _ in range(n_measure_pairs):
        n_atoms = int(rng.integers(2, max_atoms + 1))
        a = rng.normal(size=(n_atoms, d)) * rng.uniform(0.5, 3.0)
        b = rng.normal(size=(n_atoms, d)) * rng.uniform(0.5, 3.0)
        wa = rng.dirichlet(np.ones(n_atoms))
        wb = rng.dirichlet(np.ones(n_atoms))
        mpairs.append((DiscreteMeasure(a, wa), DiscreteMeasure(b, wb)))

    times = np.linspace(0.0, t_max, n_times)
    return SampleGrid(times=times, points=points, pairs=pairs, measure_pairs=tuple(mpairs))


def _finite_or_raise(arr, what, where):
    if not np.isfinite(arr).all():
        bad = np.argwhere(~np.isfinite(np.atleast_1d(arr)))[0]
        raise ModelEvaluationError(f"{what} returned a non-finite value at {where}[{bad}]")


def _ball_sup(model, x, n_shell=5):
    """sup over the eps-ball (sampled shells) of |grad V| + opnorm(hess V)."""
    offsets = np.linspace(-1.0, 1.0, n_shell) * model.eps
    if model.dim == 1:
        probes = [x + o for o in offsets]
    else:
        rng = stream_generator(StreamKey(1234, 0, 12))
        dirs = rng.normal(size=(2 * model.dim, model.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        probes = [x] + [x + model.eps * f * u for f in (0.5, 1.0) for u in dirs]
    sup = np.zeros(x.shape[0])
    for y in probes:
        gv = np.linalg.norm(model.grad_V(y), axis=1)
        hv = np.linalg.norm(model.hess_V(y), ord=2, axis=(1, 2))
        sup = np.maximum(sup, gv + hv)
    return sup


def verify_hypotheses(model: ModelSpec, grid: SampleGrid | None = None, seed: int = 0) -> HypothesisReport:
    """Check the model's structural requirements pointwise on a sample grid.

    Deterministic: identical inputs give identical reports.  A model counts
    as verified when every condition's worst residual is <= 0 up to 1e-9.
    """
    if grid is None:
        grid = default_sample_grid(model, seed=seed)
    tol = 1e-9
    conds = {}
    pts = grid.points
    times = grid.times

    def record(name, residual, location=""):
        conds[name] = ConditionResult(name, bool(residual <= tol), float(residual), location)

    # Lyapunov floor and growth along rays.
    v = model.lyapunov_V(pts)
    _finite_or_raise(v, "lyapunov_V", "points")
    record("weight_floor", 1.0 - float(v.min()), f"x={pts[int(np.argmin(v))]}")
    radii = np.linalg.norm(pts, axis=1)
    order = np.argsort(radii)
    far = v[order][-5:].min()
    near = v[order][: max(5, len(v) // 4)].max()
    if model.phi_weight_bounded:
        growth_resid = near - far  # bounded weights only need strict growth
    else:
        growth_resid = 2.0 * near - far  # unbounded: far values must dominate
    record("weight_growth", float(growth_resid), "ray battery")

    # Ellipticity of a = sigma sigma^T over (t, x).
    worst_low, worst_high, loc = np.inf, 0.0, ""
    for t in times[:: max(1, len(times) // 5)]:
        sig = np.asarray(model.sigma(t, pts), dtype=float)
        _finite_or_raise(sig, "sigma", f"t={t}")
        a = np.einsum("ndm,nem->nde", sig, sig)
        eig = np.linalg.eigvalsh(a)
        lo = float(eig.min())
        hi = float(eig.max())
        if lo < worst_low:
            worst_low, loc = lo, f"t={t}"
        worst_high = max(worst_high, hi)
    record("ellipticity_lower", 1e-8 - worst_low, loc)
    record("ellipticity_upper", worst_high - 1e8, "grid")

    # Local Lyapunov regularity: ball-sup of |grad V|+|hess V| vs K V.
    sup = _ball_sup(model, pts)
    resid = sup - model.K * v
    i = int(np.argmax(resid))
    record("weight_local_bound", float(resid[i]), f"x={pts[i]}")

    # Drift Lyapunov inequality.
    mu_ref = grid.measure_pairs[0][0] if grid.measure_pairs else None
    worst, wloc = -np.inf, ""
    for t in times[:: max(1, len(times) // 5)]:
        if model.is_measure_dependent:
            for mu, _ in grid.measure_pairs[:3]:
                mv = model.measure_values(mu)
                b1 = np.asarray(model.drift_regular(t, pts, mv), dtype=float)
                _finite_or_raise(b1, "drift_regular", f"t={t}")
                lhs = np.einsum("nd,nd->n", b1, model.grad_V(pts))
                lhs += model.eps * np.linalg.norm(b1, axis=1) * sup
                rhs = model.K * (v + mu.integrate(model.lyapunov_V))
                resid = lhs - rhs
                i = int(np.argmax(resid))
                if resid[i] > worst:
                    worst, wloc = float(resid[i]), f"t={t}, x={pts[i]}"
        else:
            b1 = np.asarray(model.drift_regular(t, pts, np.zeros(0)), dtype=float)
            _finite_or_raise(b1, "drift_regular", f"t={t}")
            lhs = np.einsum("nd,nd->n", b1, model.grad_V(pts))
            lhs += model.eps * np.linalg.norm(b1, axis=1) * sup
            rhs = model.K * np.asarray(model.phi_growth(v), dtype=float)
            resid = lhs - rhs
            i = int(np.argmax(resid))
            if resid[i] > worst:
                worst, wloc = float(resid[i]), f"t={t}, x={pts[i]}"
    record("drift_lyapunov", worst, wloc)

    # Measure-Lipschitz bound on exactly computable discrete pairs.
    if model.is_measure_dependent:
        worst, wloc = -np.inf, ""
        probe = pts[:: max(1, len(pts) // 16)]
        for idx, (mu, nu) in enumerate(grid.measure_pairs):
            dv = weighted_variation(mu, nu, model.lyapunov_V)
            mv_mu = model.measure_values(mu)
            mv_nu = model.measure_values(nu)
            for t in times[:: max(1, len(times) // 3)]:
                diff = model.drift(t, probe, mv_mu) - model.drift(t, probe, mv_nu)
                resid = np.linalg.norm(diff, axis=1) - model.kappa * dv
                i = int(np.argmax(resid))
                if resid[i] > worst:
                    worst, wloc = float(resid[i]), f"pair {idx}, x={probe[i]}"
        record("measure_lipschitz", worst, wloc)

    # Diffusion continuity modulus on point pairs.
    worst, wloc = -np.inf, ""
    for t in times[:: max(1, len(times) // 3)]:
        sx = np.asarray(model.sigma(t, grid.pairs[:, 0, :]), dtype=float)
        sy = np.asarray(model.sigma(t, grid.pairs[:, 1, :]), dtype=float)
        dist = np.linalg.norm(grid.pairs[:, 0, :] - grid.pairs[:, 1, :], axis=1)
        dsig = np.linalg.norm((sx - sy).reshape(sx.shape[0], -1), axis=1)
        resid = dsig - np.asarray(model.dini_modulus(dist), dtype=float)
        i = int(np.argmax(resid))
        if resid[i] > worst:
            worst, wloc = float(resid[i]), f"t={t}, |x-y|={dist[i]:.2e}"
    record("sigma_modulus", worst, wloc)

    # Modulus shape: vanishes at 0, positive and nondecreasing beyond.
    r = np.geomspace(1e-10, 1e4, 200)
    mod = np.asarray(model.dini_modulus(r), dtype=float)
    mod0 = float(np.asarray(model.dini_modulus(np.array([0.0])))[0])
    record(
        "modulus_valid",
        float(max(abs(mod0), float(-mod.min()), float(-np.diff(mod).min()))) - 1e-12,
        "",
    )

    # Monotonicity of psi(r) = r^2/phi(r)^2 on a log-spaced grid.
    psi = psi_of(model.dini_modulus)
    pv = np.asarray(psi(r))
    drops = np.diff(pv)
    record("psi_monotone", float(-(drops.min())), f"r={r[int(np.argmin(drops))]:.2e}")

    # Round-trip accuracy of the bisection inverse.
    psi_inv = psi_inverse_factory(psi)
    rr = np.geomspace(1e-6, 1e3, 50)
    back = np.asarray(psi_inv(np.asarray(psi(rr))))
    record("psi_inverse_roundtrip", float(np.max(np.abs(back - rr) / rr)) - 1e-10, "")

    # Modulus integrability proxy (divergence of the partial integrals).
    partials = dini_partial_integrals(model.dini_modulus)
    slope = tail_decay_slope(partials)
    record("dini_integral", float(slope - DIVERGENCE_SLOPE), f"increment decay slope {slope:.2f}")

    # Integrability exponents.
    kexp = model.dim / model.p0 + 2.0 / model.q0 - 1.0
    record("exponent_class", float(max(kexp, 2.0 - model.p0 + 0.0, 2.0 - model.q0)), "")
    if model.b0_exponent is not None:
        record("kick_integrability", float(model.b0_exponent * model.p0 - 1.0), "")

    return HypothesisReport(model=model.name, conditions=conds)
