import numpy as np
import pytest

from mvsde import models
from mvsde.metrics import common_histograms, weighted_variation
from mvsde.particle import MeasureFlow, ParticleCloud, simulate_frozen
from mvsde.paths import TimeGrid
from mvsde.picard import picard_map, picard_solve, rho_lambda
from mvsde.verify import bootstrap_ci


def zero_sigma(t, x):
    x = np.atleast_2d(x)
    return np.zeros((x.shape[0], 1, 1))


def test_measure_free_model_converges_immediately():
    # the map ignores the flow, so the second sweep reproduces the first
    model = models.get_model("ou")
    grid = TimeGrid(0.0, 1.0, 50)
    init = ParticleCloud.dirac(1.0, n=500)
    flow, diag = picard_solve(model, init, grid, lam=5.0, tol=1e-12, max_iter=4, seed=2)
    assert diag.converged
    assert diag.iterations == 2
    assert diag.distances[1] == 0.0


def test_picard_map_same_seed_identical():
    model = models.get_model("ou")
    grid = TimeGrid(0.0, 1.0, 20)
    init = ParticleCloud.dirac(0.0, n=50)
    f1 = MeasureFlow.constant(grid, init)
    f2 = MeasureFlow.constant(grid, ParticleCloud.dirac(5.0, n=50))
    out1 = picard_map(model, f1, init, grid, seed=3)
    out2 = picard_map(model, f2, init, grid, seed=3)
    for a, b in zip(out1.clouds, out2.clouds):
        assert np.array_equal(a.points, b.points)


def test_rho_identical_flows_zero():
    grid = TimeGrid(0.0, 1.0, 3)
    flow = MeasureFlow.constant(grid, ParticleCloud.uniform(np.random.default_rng(0).normal(size=(64, 1))))
    assert rho_lambda(flow, flow, 7.0) == 0.0


def _two_node_flows():
    grid = TimeGrid(0.0, 1.0, 1)
    rng = np.random.default_rng(1)
    shared = ParticleCloud.uniform(rng.normal(size=(128, 1)))
    end_a = ParticleCloud.uniform(rng.normal(size=(128, 1)))
    end_b = ParticleCloud.uniform(rng.normal(size=(128, 1)) + 4.0)
    return grid, MeasureFlow(grid, [shared, end_a]), MeasureFlow(grid, [shared, end_b]), end_a, end_b


def test_rho_terminal_only_difference():
    # flows share the first node; the distance is the discounted node distance
    grid, fa, fb, end_a, end_b = _two_node_flows()
    lam = 3.0
    ha, hb = common_histograms(end_a.points, end_b.points)
    d_term = weighted_variation(ha, hb, None)
    assert d_term > 0
    assert rho_lambda(fa, fb, lam) == pytest.approx(np.exp(-lam * 1.0) * d_term, rel=1e-12)


def test_rho_lambda_zero_is_plain_sup():
    grid, fa, fb, end_a, end_b = _two_node_flows()
    ha, hb = common_histograms(end_a.points, end_b.points)
    assert rho_lambda(fa, fb, 0.0) == pytest.approx(weighted_variation(ha, hb, None), rel=1e-12)


def test_rho_nonincreasing_in_lambda():
    grid, fa, fb, *_ = _two_node_flows()
    vals = [rho_lambda(fa, fb, lam) for lam in (0.0, 1.0, 5.0, 20.0)]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


def test_rho_metric_axioms():
    grid = TimeGrid(0.0, 1.0, 2)
    rng = np.random.default_rng(4)
    flows = [
        MeasureFlow(grid, [ParticleCloud.uniform(rng.normal(size=(64, 1)) + s) for s in (0.0, 0.5, sh)])
        for sh in (0.0, 1.0, 2.0)
    ]
    a, b, c = flows
    for lam in (0.0, 2.0):
        dab = rho_lambda(a, b, lam)
        assert dab == pytest.approx(rho_lambda(b, a, lam), abs=1e-12)
        assert dab <= rho_lambda(a, c, lam) + rho_lambda(c, b, lam) + 1e-9


def test_picard_map_mean_field_matches_moment_ode():
    # constant zero input flow turns the drift into plain decay; the output
    # mean must follow dm/dt = -m (independently integrated here)
    model = models.get_model("linear_mf")
    grid = TimeGrid(0.0, 1.0, 400)
    init = ParticleCloud.dirac(1.0, n=4000)
    zero_flow = MeasureFlow.constant(grid, ParticleCloud.dirac(0.0, n=4000))
    out = picard_map(model, zero_flow, init, grid, seed=5)
    m = 1.0
    for _ in range(400):  # forward Euler on the moment equation
        m += -m * grid.dt[0]
    ci = bootstrap_ci(out.clouds[-1].points[:, 0], seed=6)
    assert abs(ci.estimate - m) <= 3.0 * ci.se


def test_picard_map_pure_quadrature():
    # sigma = 0, drift = mu(id): trajectories are the running left-rule
    # integral of the input flow's mean path
    h_id = lambda x: np.atleast_2d(x)[:, 0]
    V, g, h = models._quadratic_weight()
    model = models.ModelSpec(
        name="quad",
        dim=1,
        bm_dim=1,
        drift_regular=lambda t, x, mv: np.full_like(np.atleast_2d(x), mv[0]),
        sigma=zero_sigma,
        lyapunov_V=V,
        grad_V=g,
        hess_V=h,
        phi_growth=lambda s: np.asarray(s, dtype=float),
        dini_modulus=models.sqrt_modulus(),
        K=4.0,
        kappa=1.0,
        eps=0.1,
        p0=4.0,
        q0=8.0,
        measure_tests=(h_id,),
    )
    grid = TimeGrid(0.0, 1.0, 32)
    mean_path = np.sin(grid.nodes)
    clouds = [ParticleCloud.uniform(np.full((4, 1), mp)) for mp in mean_path]
    flow = MeasureFlow(grid, clouds)
    init = ParticleCloud.uniform(np.array([[0.0], [1.0], [-1.0], [2.0]]))
    ens = simulate_frozen(model, flow, init, grid, seed=0)
    expected = init.points[:, 0:1] + np.concatenate(
        [[0.0], np.cumsum(mean_path[:-1] * grid.dt)]
    )[None, :]
    assert np.allclose(ens.trajectories[:, :, 0], expected, atol=1e-12)


def test_picard_solve_deterministic():
    model = models.get_model("linear_mf")
    grid = TimeGrid(0.0, 0.5, 50)
    init = ParticleCloud.dirac(1.0, n=500)
    _, d1 = picard_solve(model, init, grid, lam=10.0, tol=1e-4, max_iter=6, seed=8)
    _, d2 = picard_solve(model, init, grid, lam=10.0, tol=1e-4, max_iter=6, seed=8)
    assert np.array_equal(d1.distances, d2.distances)


def test_contraction_improves_with_lambda():
    # heavier discounting shrinks the first contraction ratio, monotone
    # within noise across lambda = 1, 5, 20
    model = models.get_model("linear_mf")
    grid = TimeGrid(0.0, 1.0, 100)
    init = ParticleCloud.dirac(1.0, n=4000)
    firsts = {}
    for lam in (1.0, 5.0, 20.0):
        _, diag = picard_solve(model, init, grid, lam=lam, tol=1e-12, max_iter=3, seed=9)
        firsts[lam] = diag.distances[1] / diag.distances[0]
    assert firsts[5.0] <= firsts[1.0] * 1.5
    assert firsts[20.0] <= firsts[5.0] * 1.5
    assert firsts[20.0] <= firsts[1.0]


def test_two_route_gate_detects_unconverged_flow():
    # sensitivity control at the acceptance sample size: stopping after one
    # sweep leaves a terminal cloud the twin-calibrated gate must reject
    from mvsde.particle import simulate_interacting
    from mvsde.suites import _sorted_w2, _twin_w2_scale

    model = models.get_model("linear_mf")
    grid = TimeGrid(0.0, 1.0, 100)
    init = ParticleCloud.dirac(1.0, n=10000)
    one_sweep = picard_map(model, MeasureFlow.constant(grid, init), init, grid, seed=30)
    inter = simulate_interacting(model, 10000, init, grid, seed=31)
    w2 = _sorted_w2(one_sweep.clouds[-1].points, inter.clouds[-1].points)
    scale = _twin_w2_scale(model, 10000, init, grid, seed=32)
    assert w2 > 3.0 * scale


def test_picard_validation():
    model = models.get_model("ou")
    grid = TimeGrid(0.0, 1.0, 4)
    init = ParticleCloud.dirac(0.0, n=8)
    with pytest.raises(ValueError):
        picard_solve(model, init, grid, tol=-1.0)
    with pytest.raises(ValueError):
        picard_solve(model, init, grid, max_iter=1)
    with pytest.raises(ValueError):
        rho_lambda(MeasureFlow.constant(grid, init), MeasureFlow.constant(TimeGrid(0.0, 1.0, 5), init), 1.0)
