"""Multi-dimensional code paths: the built-in batteries run in one
dimension, so the generic routes (stacked linear solves in the steering,
assignment-based transport, 2-d histograms, ball suprema over random
directions) are exercised here."""

import numpy as np
import pytest

from mvsde import models
from mvsde.coupling import coupled_batch, coupled_simulate
from mvsde.metrics import DiscreteMeasure, common_histograms, wasserstein, weighted_variation
from mvsde.metrics import _cost_matrix, _transport_lp
from mvsde.particle import ParticleCloud, simulate_classical
from mvsde.paths import TimeGrid
from mvsde.verify import bootstrap_ci, ou_oracle


def test_verify_hypotheses_2d():
    model = models.get_model("ou", dim=2)
    rep = models.verify_hypotheses(model)
    assert rep.verified, rep.summary()


def test_simulate_2d_matches_oracle_per_coordinate():
    model = models.get_model("ou", dim=2)
    grid = TimeGrid(0.0, 1.0, 500)
    init = ParticleCloud.uniform(np.tile([1.0, -2.0], (4000, 1)))
    ens = simulate_classical(model, init, grid, seed=40)
    mean1, _ = ou_oracle(1.0, 1.0, 1.0, 1.0)
    mean2, _ = ou_oracle(1.0, 1.0, 1.0, -2.0)
    for dim, exact in ((0, mean1), (1, mean2)):
        ci = bootstrap_ci(ens.trajectories[:, -1, dim], seed=41 + dim)
        assert abs(ci.estimate - exact) <= 3.0 * ci.se


def test_coupled_pair_2d():
    model = models.get_model("ou", dim=2)
    grid = TimeGrid(0.0, 1.0, 400)
    run = coupled_simulate(model, np.zeros(2), np.array([1.0, -1.0]), 1.0, grid, seed=42)
    assert run.terminal_gap < 1e-4  # shared noise and constant diffusion meet
    runs = coupled_batch(model, np.zeros(2), np.ones(2), 1.0, grid, seed=43, n_runs=400)
    w = np.array([r.weight for r in runs])
    ci = bootstrap_ci(w, seed=44)
    assert abs(ci.estimate - 1.0) <= 3.0 * ci.se


def test_wasserstein_2d_assignment_vs_lp():
    rng = np.random.default_rng(45)
    a = DiscreteMeasure.from_points(rng.normal(size=(32, 2)))
    b = DiscreteMeasure.from_points(rng.normal(size=(32, 2)) + 0.5)
    fast = wasserstein(a, b, 2.0)
    lp = _transport_lp(_cost_matrix(a, b, 2.0), a.masses, b.masses) ** 0.5
    assert fast == pytest.approx(lp, abs=1e-8)


def test_wasserstein_2d_two_points():
    a = DiscreteMeasure.dirac(np.array([0.0, 0.0]))
    b = DiscreteMeasure.dirac(np.array([3.0, 4.0]))
    assert wasserstein(a, b, 1.0) == pytest.approx(5.0, abs=1e-12)
    assert wasserstein(a, b, 2.0) == pytest.approx(5.0, abs=1e-12)


def test_histograms_2d():
    rng = np.random.default_rng(46)
    xa = rng.normal(size=(4000, 2))
    xb = rng.normal(size=(4000, 2)) + np.array([1.5, 0.0])
    ha, hb = common_histograms(xa, xb, resolution=32)
    assert ha.cell_masses.shape == (32, 32)
    tv = weighted_variation(ha, hb, None)
    assert 0.5 < tv <= 2.0
    same = weighted_variation(ha, ha, None)
    assert same == 0.0
