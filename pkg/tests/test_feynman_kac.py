"""Path-functional estimators: exact limits, algebraic identities, cross-checks."""

import math

import numpy as np
import pytest

from mildbbm.analysis import ModelConstants
from mildbbm.branching import SimConfig, run_bbm
from mildbbm.environment import ObstacleField
from mildbbm.feynman_kac import (
    FkEstimate,
    estimate_annealed_mass,
    estimate_quenched_mass,
    occupation_functional,
    sample_free_times,
    write_estimates_csv,
)
from mildbbm.seeds import derive_seed


class BlockEverywhere:
    d = 1

    def is_blocked_many(self, xs):
        return np.ones(len(np.atleast_1d(xs)), dtype=bool)


def empty_field(d=1):
    return ObstacleField.from_points([], a=0.3, d=d)


class TestOccupationFunctional:
    def test_empty_field_gives_full_time(self):
        path = np.zeros(101)
        assert occupation_functional(path, empty_field(), 0.01) == pytest.approx(1.0, abs=1e-12)

    def test_blocked_everywhere_gives_zero(self):
        path = np.zeros(101)
        assert occupation_functional(path, BlockEverywhere(), 0.01) == 0.0

    def test_left_endpoint_rule(self):
        # blocked iff |x - 2| <= 0.5; path enters the ball at its 3rd point
        field = ObstacleField.from_points([[2.0]], a=0.5)
        path = np.asarray([0.0, 1.0, 2.0, 2.2, 1.0])
        # left endpoints: 0, 1, 2, 2.2 -> two blocked
        assert occupation_functional(path, field, 0.5) == pytest.approx(1.0)


class TestQuenchedEstimator:
    def test_empty_field_exact(self):
        est = estimate_quenched_mass(empty_field(), 1.0, 2.0, 1e-3, 50, seed=1)
        assert est.point_estimate == pytest.approx(math.exp(est.t), rel=1e-14)
        assert est.std_error <= 1e-14
        assert est.n_environments == 1

    def test_blocked_everywhere_exact_one(self):
        est = estimate_quenched_mass(BlockEverywhere(), 1.0, 2.0, 1e-3, 50, seed=2)
        assert est.point_estimate == 1.0
        assert est.std_error == 0.0

    def test_bounds_hold(self):
        field = ObstacleField(1, 0.7, 0.3, 55, 1.0)
        for s in range(5):
            est = estimate_quenched_mass(field, 1.2, 1.5, 5e-3, 400, seed=s)
            assert 1.0 <= est.point_estimate <= math.exp(1.2 * est.t)

    def test_complement_form_identity(self):
        field = ObstacleField(1, 0.5, 0.3, 7, 1.0)
        beta, t, dt = 1.0, 2.0, 1e-3
        free, t_eff = sample_free_times(field, beta, t, dt, 500, seed=3)
        direct = np.exp(beta * free)
        complement = math.exp(beta * t_eff) * np.exp(-beta * (t_eff - free))
        assert np.all(np.abs(complement / direct - 1.0) < 1e-12)
        est = estimate_quenched_mass(field, beta, t, dt, 500, seed=3)
        assert est.complement_estimate == pytest.approx(est.point_estimate, rel=1e-12)

    def test_monotone_in_blocking_radius(self):
        # same centres, same paths: larger blocking balls can only shrink
        # the free time, hence the estimate
        seeds = dict(d=1, nu=0.6, master_seed=88, cell_size=1.0)
        small = ObstacleField(a=0.2, **seeds)
        large = ObstacleField(a=0.4, **seeds)
        f_small, _ = sample_free_times(small, 1.0, 2.0, 1e-3, 300, seed=4)
        f_large, _ = sample_free_times(large, 1.0, 2.0, 1e-3, 300, seed=4)
        assert np.all(f_large <= f_small + 1e-12)

    def test_monotone_in_intensity_by_superposition(self):
        # union of two independent fields = higher-intensity field
        base = ObstacleField(1, 0.4, 0.3, 21, 1.0)
        extra = ObstacleField(1, 0.4, 0.3, 22, 1.0)

        class Union:
            d = 1

            def is_blocked_many(self, xs):
                return base.is_blocked_many(xs) | extra.is_blocked_many(xs)

        f_base, _ = sample_free_times(base, 1.0, 2.0, 1e-3, 300, seed=5)
        f_union, _ = sample_free_times(Union(), 1.0, 2.0, 1e-3, 300, seed=5)
        assert np.all(f_union <= f_base + 1e-12)

    def test_dt_halving_consistency(self):
        field = ObstacleField(1, 0.5, 0.3, 77, 1.0)
        est = estimate_quenched_mass(field, 1.0, 4.0, 1e-3, 4000, seed=6)
        est_half = estimate_quenched_mass(field, 1.0, 4.0, 5e-4, 4000, seed=7)
        shift = abs(est.point_estimate - est_half.point_estimate)
        assert shift < 2.0 * math.hypot(est.std_error, est_half.std_error)


class TestAnnealedEstimator:
    def test_reduces_to_free_growth_without_obstacles(self):
        est = estimate_annealed_mass(1, 1e-9, 0.3, 1.0, 2.0, 1e-2, 50, 4, seed=8)
        assert est.point_estimate == pytest.approx(math.exp(est.t), rel=1e-6)

    def test_environment_averaging_fields(self):
        est = estimate_annealed_mass(1, 1.0, 0.3, 1.0, 2.0, 5e-3, 200, 6, seed=9)
        assert est.n_environments == 6
        assert est.n_paths == 200
        assert 1.0 <= est.point_estimate <= math.exp(est.t)
        assert est.complement_estimate == pytest.approx(est.point_estimate, rel=1e-12)
        assert est.std_error > 0
        assert est.log_std_error == pytest.approx(est.std_error / est.point_estimate)

    def test_slowdown_deficit_grows(self):
        # beta t - log(estimate) positive and increasing with the horizon
        deficits = []
        for t in (2.0, 4.0, 8.0):
            est = estimate_annealed_mass(1, 1.0, 0.3, 1.0, t, 2e-3, 400, 8, seed=10)
            deficits.append(1.0 * est.t - est.log_estimate)
        assert all(d > 0 for d in deficits)
        assert deficits[0] < deficits[1] < deficits[2]


class TestHigherDimension:
    def test_d2_estimator_bounds_and_identity(self):
        field = ObstacleField(2, 0.5, 0.4, 33, 1.0)
        est = estimate_quenched_mass(field, 1.0, 1.0, 5e-3, 300, seed=12)
        assert 1.0 <= est.point_estimate <= math.exp(est.t)
        assert est.complement_estimate == pytest.approx(est.point_estimate, rel=1e-12)

    def test_drift_shifts_paths(self):
        # a field far to the right blocks drifted paths but not driftless ones
        field = ObstacleField.from_points([[6.0]], a=2.0, d=1)
        still, _ = sample_free_times(field, 1.0, 3.0, 1e-2, 200, seed=13, drift=0.0)
        pushed, _ = sample_free_times(field, 1.0, 3.0, 1e-2, 200, seed=13, drift=2.0)
        assert still.mean() > pushed.mean()


class TestBranchingCrossCheck:
    def test_means_agree_on_fixed_field(self):
        # the central equivalence at reduced scale: E|Z_t| from particle
        # runs vs the path-functional estimate, one fixed environment
        field = ObstacleField(1, 0.5, 0.3, 1234, 1.0)
        mc = ModelConstants(1, 0.5, 1.0, 0.3)
        runs, t = 3000, 2.5
        sizes = np.empty(runs)
        for i in range(runs):
            cfg = SimConfig(mc=mc, t_max=t, obs_times=(t,), seed=derive_seed(9, "run", i))
            c, _ = run_bbm(cfg, field)
            sizes[i] = c.counts[-1]
        est = estimate_quenched_mass(field, 1.0, t, 1e-3, 6000, seed=11)
        combined = math.hypot(sizes.std(ddof=1) / math.sqrt(runs), est.std_error)
        assert abs(sizes.mean() - est.point_estimate) <= 3 * combined


class TestCsvExport:
    def test_format(self, tmp_path):
        est = FkEstimate(
            t=2.0,
            point_estimate=5.0,
            log_estimate=math.log(5.0),
            std_error=0.1,
            n_paths=100,
            n_environments=1,
            log_std_error=0.02,
            complement_estimate=5.0,
        )
        path = tmp_path / "fk.csv"
        write_estimates_csv(path, [est], header="seed=1")
        lines = path.read_text().splitlines()
        assert lines[0] == "# seed=1"
        assert lines[1] == "t,estimate,log_estimate,se,n_paths,n_envs"
        assert lines[2].startswith("2,5,")
