"""Backward-induction design of channel sequences.

Stage ``n`` applies one option ``F_n`` from a finite menu.  The system
state after ``n`` stages is ``(sigma_n, A_n)`` with ``sigma_{n+1} = F_n
sigma_n`` and ``A_{n+1} = F_{n*} A_n``, and the stage cost is the minimum
divergence of that GCE.  Total cost is the final Bayesian error, so the
cheapest policy is the best measurement design.

Nodes are keyed by their choice prefix rather than by the numerical value
of ``(sigma, A)``; no state merging is attempted, so the tree has
``prod |options|`` leaves.
"""
import itertools
from dataclasses import dataclass, field

import numpy as np

from .channels import compose_chain
from .errors import DimensionError, ValidationError
from .gce import gce
from .operators import JORDAN, as_operator, density
from .parallel import ordered_map

EXHAUSTIVE_BUDGET = 100_000


@dataclass(frozen=True, eq=False)
class DpProblem:
    sigma0: object
    a0: np.ndarray
    stages: tuple
    product: object = JORDAN

    def __post_init__(self):
        stages = tuple(tuple(opts) for opts in self.stages)
        if not stages:
            raise ValidationError("DP problem needs at least one stage", module="dp-planner")
        for n, opts in enumerate(stages):
            if not opts:
                raise ValidationError(f"stage {n} has no options", module="dp-planner")
        object.__setattr__(self, "stages", stages)
        object.__setattr__(self, "sigma0", density(self.sigma0))
        object.__setattr__(self, "a0", as_operator(self.a0, "a0"))

    @property
    def n_policies(self):
        return int(np.prod([len(s) for s in self.stages]))


@dataclass(frozen=True, eq=False)
class Rollout:
    states: list
    estimators: list
    costs: np.ndarray

    @property
    def total(self):
        return float(sum(self.costs))


@dataclass(frozen=True, eq=False)
class DpSolution:
    policy: tuple
    total_cost: float
    stage_costs: np.ndarray
    value_table: dict = field(repr=False)

    def value_rows(self):
        """``(prefix, cost_to_go, best_next)`` rows sorted by prefix."""
        rows = []
        for prefix in sorted(self.value_table, key=lambda p: (len(p), p)):
            cost, best = self.value_table[prefix]
            rows.append((prefix, cost, best))
        return rows


def _step(problem, state, est, stage, option):
    ch = problem.stages[stage][option]
    if ch.dim_in != state.dim:
        raise DimensionError(f"stage {stage} option {option} ('{ch.label}') expects dim {ch.dim_in}, "
                             f"but the state has dim {state.dim}", module="dp-planner")
    res = gce(problem.product, state, ch, est)
    return res.output_state, res.estimator, res.min_divergence


def rollout(problem, choices):
    """Run one policy; returns states ``sigma_n``, estimators ``A_n`` and stage costs ``D_n``."""
    choices = tuple(int(c) for c in choices)
    if len(choices) != len(problem.stages):
        raise ValidationError(f"need {len(problem.stages)} choices, got {len(choices)}", module="dp-planner")
    state, est = problem.sigma0, problem.a0
    states, ests, costs = [state], [est], []
    for n, c in enumerate(choices):
        if not 0 <= c < len(problem.stages[n]):
            raise ValidationError(f"choice {c} out of range at stage {n}", module="dp-planner")
        state, est, cost = _step(problem, state, est, n, c)
        states.append(state)
        ests.append(est)
        costs.append(cost)
    return Rollout(states, ests, np.array(costs))


def composed_divergence(problem, choices):
    """Single-shot minimum divergence of the composed channel for a policy."""
    chain = [problem.stages[n][c] for n, c in enumerate(choices)]
    return gce(problem.product, problem.sigma0, compose_chain(chain), problem.a0).min_divergence


def _expand(problem, prefix, state, est, acc, table):
    """Best complete total below ``prefix``; fills ``table`` with cost-to-go rows.

    ``acc`` is the cost accumulated along ``prefix``.  Carrying it down makes
    every leaf total the same left-to-right float sum a rollout produces, so
    comparisons agree bit for bit with exhaustive search.
    """
    stage = len(prefix)
    best_total, best_opt = None, None
    for opt in range(len(problem.stages[stage])):
        nstate, nest, cost = _step(problem, state, est, stage, opt)
        total = acc + cost
        if stage + 1 < len(problem.stages):
            total = _expand(problem, prefix + (opt,), nstate, nest, total, table)
        if best_total is None or total < best_total:
            best_total, best_opt = total, opt
    table[prefix] = (best_total - acc, best_opt)
    return best_total


def solve_dp(problem, threads=None):
    """Optimal policy by backward induction over the reachable-state tree.

    Sibling subtrees of the root are independent and may be evaluated in
    parallel; results are merged in option order, so ties still resolve to
    the lexicographically smallest policy.
    """
    s0, a0 = problem.sigma0, problem.a0
    n_root = len(problem.stages[0])

    def root_branch(opt):
        table = {}
        nstate, nest, cost = _step(problem, s0, a0, 0, opt)
        total = 0.0 + cost
        if len(problem.stages) > 1:
            total = _expand(problem, (opt,), nstate, nest, total, table)
        return total, table

    branches = ordered_map(root_branch, range(n_root), threads)
    table = {}
    best_total, best_opt = None, None
    for opt, (total, sub) in enumerate(branches):
        table.update(sub)
        if best_total is None or total < best_total:
            best_total, best_opt = total, opt
    table[()] = (best_total, best_opt)

    policy = [best_opt]
    while len(policy) < len(problem.stages):
        policy.append(table[tuple(policy)][1])
    ro = rollout(problem, policy)
    return DpSolution(tuple(policy), ro.total, ro.costs, table)


def exhaustive_search(problem, budget=EXHAUSTIVE_BUDGET):
    """Evaluate every policy by rollout and keep the cheapest (first on ties)."""
    if problem.n_policies > budget:
        raise ValidationError(f"{problem.n_policies} policies exceed the exhaustive budget {budget}",
                              module="dp-planner")
    best = None
    table = {}
    for policy in itertools.product(*[range(len(s)) for s in problem.stages]):
        ro = rollout(problem, policy)
        table[policy] = (ro.total, None)
        if best is None or ro.total < best[1].total:
            best = (policy, ro)
    policy, ro = best
    return DpSolution(tuple(policy), ro.total, ro.costs, table)


def subproblem(problem, prefix):
    """The problem that remains after committing to ``prefix``."""
    ro = rollout_prefix(problem, prefix)
    return DpProblem(ro[0], ro[1], problem.stages[len(prefix):], problem.product)


def rollout_prefix(problem, prefix):
    state, est = problem.sigma0, problem.a0
    for n, c in enumerate(prefix):
        state, est, _ = _step(problem, state, est, n, c)
    return state, est
