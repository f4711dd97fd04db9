import numpy as np
import pytest

from mvsde import models, verify
from mvsde.particle import ParticleCloud


# ---------------------------------------------------------------------------
# closed-form oracle
# ---------------------------------------------------------------------------


def test_oracle_brownian_limit():
    mean, var = verify.ou_oracle(0.0, 2.0, 3.0, 1.5)
    assert mean == pytest.approx(1.5)
    assert var == pytest.approx(4.0 * 3.0)


def test_oracle_reference_values():
    mean, var = verify.ou_oracle(1.0, 1.0, 1.0, 1.0)
    assert mean == pytest.approx(np.exp(-1.0), rel=1e-12)
    assert var == pytest.approx((1.0 - np.exp(-2.0)) / 2.0, rel=1e-12)
    assert var == pytest.approx(0.43233, abs=5e-6)


def test_oracle_variance_ode_crosscheck():
    # independent route: forward-Euler integration of v' = -2 theta v + s^2
    theta, s, t = 1.3, 0.7, 0.9
    n = 200000
    dt = t / n
    v = 0.0
    for _ in range(n):
        v += (-2.0 * theta * v + s**2) * dt
    _, var = verify.ou_oracle(theta, s, t, 0.0)
    assert var == pytest.approx(v, rel=1e-4)


def test_oracle_stationary_limit():
    _, var = verify.ou_oracle(2.0, 1.5, 50.0, 3.0)
    assert var == pytest.approx(1.5**2 / 4.0, rel=1e-10)


def test_oracle_validation():
    with pytest.raises(ValueError):
        verify.ou_oracle(1.0, 0.0, 1.0, 0.0)


def test_gaussian_expectation_quadrature():
    # discontinuous integrand: accuracy limited by the grid at the jump
    val = verify.ou_expectation(lambda x: (x[:, 0] >= 0).astype(float), 0.0, 1.0)
    assert val == pytest.approx(0.5, abs=1e-4)
    # smooth integrand: essentially exact
    smooth = verify.ou_expectation(lambda x: np.exp(-x[:, 0] ** 2), 0.0, 1.0)
    assert smooth == pytest.approx(1.0 / np.sqrt(3.0), abs=1e-9)


# ---------------------------------------------------------------------------
# bootstrap
# ---------------------------------------------------------------------------


def test_bootstrap_deterministic():
    vals = np.random.default_rng(0).normal(size=500)
    a = verify.bootstrap_ci(vals, seed=3)
    b = verify.bootstrap_ci(vals, seed=3)
    assert a == b
    assert a.lo <= a.estimate <= a.hi
    assert a.n_boot == 200


def test_bootstrap_covers_mean():
    vals = np.random.default_rng(1).normal(loc=2.0, size=2000)
    ci = verify.bootstrap_ci(vals, seed=4)
    assert abs(ci.estimate - 2.0) <= 4.0 * ci.se


# ---------------------------------------------------------------------------
# semigroup estimates
# ---------------------------------------------------------------------------


def test_mc_semigroup_constant_function():
    model = models.get_model("ou")
    out = verify.mc_semigroup(model, ParticleCloud.dirac(1.0), 0.5, lambda x: np.ones(len(x)), 500, seed=5)
    assert out["estimate"] == pytest.approx(1.0, abs=1e-15)


def test_mc_semigroup_matches_oracle_indicator():
    model = models.get_model("ou")
    f = lambda x: (x[:, 0] >= 0).astype(float)
    out = verify.mc_semigroup(model, ParticleCloud.dirac(1.0), 1.0, f, 10000, seed=6)
    mean, var = verify.ou_oracle(1.0, 1.0, 1.0, 1.0)
    exact = verify.ou_expectation(f, mean, var)
    assert abs(out["estimate"] - exact) <= 3.0 * out["ci"].se


def test_mc_semigroup_capped_weight_stable():
    model = models.get_model("cubic")
    f = lambda x: np.minimum(model.lyapunov_V(x), 100.0)
    small = verify.mc_semigroup(model, ParticleCloud.dirac(2.0), 1.0, f, 2000, seed=7)
    big = verify.mc_semigroup(model, ParticleCloud.dirac(2.0), 1.0, f, 4000, seed=8)
    assert np.isfinite(small["estimate"]) and np.isfinite(big["estimate"])
    pooled = np.hypot(small["ci"].se, big["ci"].se)
    assert abs(small["estimate"] - big["estimate"]) <= 4.0 * pooled


def test_mc_semigroup_rejects_unbounded_f():
    model = models.get_model("ou")
    bad = lambda x: np.full(len(x), np.inf)
    with pytest.raises(ValueError):
        verify.mc_semigroup(model, ParticleCloud.dirac(1.0), 0.1, bad, 100, seed=9)


# ---------------------------------------------------------------------------
# displaced-start comparison
# ---------------------------------------------------------------------------


def test_harnack_equal_points_needs_no_constant():
    model = models.get_model("ou")
    fs = {"step": verify.standard_f_battery()["step"]}
    reports = verify.harnack_check(model, 1.0, 1.0, 0.5, fs, (2.0,), n=4000, seed=10)
    verify.finalize_harnack(reports, c=1e-9)
    assert all(r.passed for r in reports if r.passed is not None)
    assert all(r.c_required <= 0.05 for r in reports)


def test_harnack_fit_and_validate_roundtrip():
    model = models.get_model("ou")
    fs = verify.standard_f_battery()
    train = verify.harnack_check(model, 0.0, 1.0, 0.5, fs, (2.0,), n=4000, seed=11)
    c = verify.fit_harnack_constant(train)
    assert c > 0
    verify.finalize_harnack(train, c)
    decided = [r for r in train if r.passed is not None]
    assert decided and all(r.passed for r in decided)


def test_harnack_distribution_equal_clouds_diagonal():
    model = models.get_model("linear_mf")
    cloud = ParticleCloud.uniform(np.random.default_rng(2).normal(size=(32, 1)))
    f = verify.standard_f_battery()["bump"]
    rep = verify.harnack_distribution_check(model, cloud, cloud, 0.5, f, 2.0, c=1.3, n=3000, seed=12)
    assert rep.rhs / rep.rhs_base == pytest.approx(np.exp(1.3), abs=1e-9)
    assert rep.passed


def test_harnack_distribution_overflow_is_inconclusive():
    model = models.get_model("linear_mf")
    a = ParticleCloud.uniform(np.zeros((4, 1)))
    b = ParticleCloud.uniform(np.full((4, 1), 1e6))
    f = verify.standard_f_battery()["bump"]
    rep = verify.harnack_distribution_check(model, a, b, 0.1, f, 2.0, c=5.0, n=200, seed=13)
    assert rep.inconclusive


# ---------------------------------------------------------------------------
# rate comparison, moments, stability
# ---------------------------------------------------------------------------


def test_grr_requires_bounded_weight():
    with pytest.raises(ValueError):
        verify.grr_check(models.get_model("ou"), [], [0.5])


def test_grr_equal_laws_pass():
    model = models.get_model("bounded_mf")
    cloud = ParticleCloud.dirac(0.0)
    out = verify.grr_check(model, [(cloud, cloud)], [0.5], n=3000, seed=14, n_steps=200)
    assert out["passed"]
    assert out["rows"][0]["w2"] == 0.0


def test_moment_deterministic_model_below_one():
    # no dynamics: the running maximum is the initial value, so the fitted
    # constant is below one
    V, g, h = models._quadratic_weight()
    model = models.ModelSpec(
        name="still", dim=1, bm_dim=1,
        drift_regular=lambda t, x, mv: np.zeros_like(np.atleast_2d(x)),
        sigma=lambda t, x: np.zeros((np.atleast_2d(x).shape[0], 1, 1)),
        lyapunov_V=V, grad_V=g, hess_V=h,
        phi_growth=lambda s: np.asarray(s, dtype=float),
        dini_modulus=models.sqrt_modulus(),
        K=4.0, kappa=1.0, eps=0.1, p0=4.0, q0=8.0,
    )
    init = ParticleCloud.uniform(np.array([[1.0], [2.0]]))
    out = verify.moment_check(model, init, (1, 2), seed=15, n_rep=50, n_steps=10)
    for nn in (1, 2):
        assert out["per_n"][nn]["c_fit"] <= 1.0
    assert not out["unreliable"]


def test_moment_rejects_measure_dependent():
    with pytest.raises(ValueError):
        verify.moment_check(models.get_model("linear_mf"), ParticleCloud.dirac(0.0), (1,))


def test_stability_constant_sequence_at_floor():
    model = models.get_model("ou")
    mu = ParticleCloud.dirac(0.0)
    out = verify.stability_check(model, [mu, mu, mu], mu, 0.5, n=3000, seed=16, n_steps=200)
    assert out["passed"]
    assert np.all(out["distances"] <= 2.0 * out["noise_floor"] + 1e-12)


def test_stability_mixture_battery():
    model = models.get_model("ou")
    rng = np.random.default_rng(3)
    base = rng.normal(size=(2000, 1))
    mu = ParticleCloud.uniform(base)
    seq = []
    for n in (2, 4, 8, 16):
        pts = base.copy()
        k = len(pts) // n
        pts[:k] = 5.0
        seq.append(ParticleCloud.uniform(pts))
    out = verify.stability_check(model, seq, mu, 0.5, n=4000, seed=17, n_steps=200)
    assert out["distances"][0] > out["distances"][-1]
    assert out["passed"]


def test_stability_var_norm_mode():
    # plain-variation mode on the bounded-weight model, whose drift is
    # Lipschitz in the variation distance of the measure argument
    model = models.get_model("bounded_mf")
    seq = [ParticleCloud.dirac(1.0 / n) for n in (1, 4, 16)]
    out = verify.stability_check(model, seq, ParticleCloud.dirac(0.0), 0.5, mode="var", n=4000, seed=20, n_steps=200)
    assert out["mode"] == "var"
    assert out["distances"][0] > out["distances"][-1]
    assert out["passed"]


def test_w2_gate_separates_laws():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(4000, 1))
    b = rng.normal(size=(4000, 1))
    assert verify.w2_null_gate(a, b, seed=18)["passed"]
    c = rng.normal(size=(4000, 1)) + 0.2
    assert not verify.w2_null_gate(a, c, seed=19)["passed"]


def test_weak_order_study_validation():
    with pytest.raises(ValueError):
        verify.weak_order_study(dts=(0.00035,), ref_dt=1e-4, n_paths=10)
