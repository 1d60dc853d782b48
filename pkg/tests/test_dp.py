import numpy as np
import pytest

from gce_metrology.channels import identity_channel
from gce_metrology.dp import (DpProblem, composed_divergence, exhaustive_search, rollout, solve_dp,
                              subproblem)
from gce_metrology.errors import DimensionError, ValidationError
from gce_metrology.gce import gce
from gce_metrology.operators import JORDAN
from gce_metrology.testing import random_channel, random_density, random_hermitian


def random_problem(rng, n_stages=3, n_options=3):
    dims = [int(v) for v in rng.integers(2, 4, size=n_stages + 1)]
    stages = [[random_channel(dims[n], dims[n + 1], rng) for _ in range(n_options)] for n in range(n_stages)]
    return DpProblem(random_density(dims[0], rng), random_hermitian(dims[0], rng), stages)


def test_matches_exhaustive(rng):
    for _ in range(10):
        p = random_problem(rng)
        s, e = solve_dp(p), exhaustive_search(p)
        assert s.policy == e.policy
        assert s.total_cost == e.total_cost
        assert s.total_cost == pytest.approx(float(np.sum(s.stage_costs)), abs=1e-10)
        assert s.total_cost == pytest.approx(composed_divergence(p, s.policy), abs=1e-8)


def test_single_stage_is_best_gce(rng):
    p = random_problem(rng, 1, 4)
    s = solve_dp(p)
    costs = [gce(JORDAN, p.sigma0, ch, p.a0).min_divergence for ch in p.stages[0]]
    assert s.policy == (int(np.argmin(costs)),)
    assert s.total_cost == pytest.approx(min(costs), abs=1e-12)


def test_identity_options_tie_to_first(rng):
    ch = random_channel(2, 2, rng)
    p = DpProblem(random_density(2, rng), random_hermitian(2, rng),
                  [[ch, ch], [identity_channel(2), identity_channel(2)]])
    assert solve_dp(p).policy == (0, 0)


def test_threads_do_not_change_the_answer(rng):
    p = random_problem(rng)
    a, b = solve_dp(p, threads=1), solve_dp(p, threads=3)
    assert a.policy == b.policy and a.total_cost == b.total_cost
    assert a.value_rows() == b.value_rows()


def test_optimal_substructure(rng):
    p = random_problem(rng)
    s = solve_dp(p)
    tail = solve_dp(subproblem(p, s.policy[:1]))
    assert tail.policy == s.policy[1:]
    cost, best = s.value_table[s.policy[:1]]
    assert tail.total_cost == pytest.approx(cost, abs=1e-12)


def test_rollout_validation(rng):
    p = random_problem(rng, 2, 2)
    with pytest.raises(ValidationError):
        rollout(p, (0,))
    with pytest.raises(ValidationError):
        rollout(p, (0, 5))


def test_dimension_mismatch_reported(rng):
    p = DpProblem(random_density(2, rng), random_hermitian(2, rng),
                  [[random_channel(2, 3, rng)], [random_channel(2, 2, rng)]])
    with pytest.raises(DimensionError, match="stage 1"):
        solve_dp(p)


def test_exhaustive_budget(rng):
    p = random_problem(rng, 3, 3)
    with pytest.raises(ValidationError, match="budget"):
        exhaustive_search(p, budget=10)


def test_empty_stage_rejected(rng):
    with pytest.raises(ValidationError):
        DpProblem(random_density(2, rng), np.eye(2), [[]])
