"""Scoring rules, the two-part payment scheme, and truthfulness checks.

First-order reports are scored against the recovered state; second-order
reports are scored against the realized population average, treated as a
verifiable outcome vector because a large population effectively reveals it.
``truthfulness_check`` certifies properness by brute force: it enumerates all
simplex-grid deviations of either report and compares expected scores under
the truthful posterior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import (
    BeliefVector,
    InfoStructure,
    StateSpace,
    _belief_array,
    expected_belief_matrix,
    posterior_matrix,
)
from .population import PopulationDraw

__all__ = [
    "ScoringRule",
    "PaymentSchedule",
    "TruthfulnessReport",
    "score",
    "settle",
    "truthfulness_check",
    "simplex_grid",
]

#: A scoring rule may also be any callable (report_array, outcome) -> float,
#: where outcome is a state index or a realized vector.
RuleLike = "ScoringRule | Callable[[np.ndarray, int | np.ndarray], float]"


@dataclass(frozen=True)
class ScoringRule:
    """A proper scoring rule: quadratic ("brier") or floored "logarithmic"."""

    kind: str
    log_floor: float = 1e-6

    def __post_init__(self) -> None:
        if self.kind not in ("brier", "logarithmic"):
            raise ValueError(f"kind must be 'brier' or 'logarithmic', got {self.kind!r}")
        if not 0.0 < self.log_floor <= 0.01:
            raise ValueError(f"log_floor must be in (0, 0.01], got {self.log_floor!r}")


@dataclass(frozen=True)
class PaymentSchedule:
    """Scales and rules for the two payment components: every agent's
    first-order score, plus designated reporters' second-order score against
    the realized population average.  A zero scale switches a component off."""

    first_order_rule: ScoringRule
    second_order_rule: ScoringRule
    first_order_scale: float = 1.0
    second_order_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.first_order_scale < 0 or self.second_order_scale < 0:
            raise ValueError("payment scales must be nonnegative")


def _resolve_outcome(
    outcome: str | int | BeliefVector | Sequence[float] | np.ndarray,
    states: StateSpace | None,
) -> int | np.ndarray:
    if isinstance(outcome, str):
        if states is None:
            raise ValueError("a state-label outcome needs the states argument")
        return states.index(outcome)
    if isinstance(outcome, (int, np.integer)):
        return int(outcome)
    if isinstance(outcome, BeliefVector):
        return outcome.as_array()
    return np.asarray(outcome, dtype=float)


def _evaluate(rule, report: np.ndarray, outcome: int | np.ndarray) -> float:
    if not isinstance(rule, ScoringRule):
        return float(rule(report, outcome))
    if rule.kind == "brier":
        if isinstance(outcome, int):
            target = np.zeros_like(report)
            target[outcome] = 1.0
        else:
            target = outcome
        return float(-np.sum((report - target) ** 2))
    clipped = np.maximum(report, rule.log_floor)
    if isinstance(outcome, int):
        return float(math.log(clipped[outcome]))
    return float(outcome @ np.log(clipped))


def score(
    rule,
    report: BeliefVector | Sequence[float] | np.ndarray,
    outcome: str | int | BeliefVector | Sequence[float] | np.ndarray,
    states: StateSpace | None = None,
) -> float:
    """Score one report against a realized state (label or index) or a
    realized probability vector.

    Brier against a state is -sum((report - indicator)^2); against a vector
    the indicator is replaced by the vector.  The logarithmic rule floors the
    scored probability at ``log_floor``.  ``rule`` may also be any callable
    ``(report_array, outcome) -> float`` for experimentation.
    """
    return _evaluate(rule, _belief_array(report), _resolve_outcome(outcome, states))


def settle(
    draw: PopulationDraw,
    outcome,
    schedule: PaymentSchedule,
    designated: Sequence[int] | None = None,
) -> np.ndarray:
    """Per-agent payments for one aggregation run.

    Every agent earns the scaled first-order score of their belief against the
    recovered state; designated reporters (``draw``'s own carriers unless
    overridden) additionally earn the scaled second-order score against the
    realized population average from ``outcome``.
    """
    states = draw.structure.states
    state_idx = states.index(outcome.recovered_state)
    realized = outcome.population_mean.as_array()

    rule = schedule.first_order_rule
    if isinstance(rule, ScoringRule) and rule.kind == "brier":
        target = np.zeros(len(states))
        target[state_idx] = 1.0
        first_scores = -np.sum((draw.first_order - target) ** 2, axis=1)
    elif isinstance(rule, ScoringRule):
        clipped = np.maximum(draw.first_order, rule.log_floor)
        first_scores = np.log(clipped[:, state_idx])
    else:
        first_scores = np.array(
            [_evaluate(rule, draw.first_order[i], state_idx) for i in range(draw.n)]
        )
    payments = schedule.first_order_scale * first_scores

    if designated is None:
        if draw.second_order is None:
            carriers: tuple[int, ...] = ()
        elif draw.designated is None:
            carriers = tuple(range(draw.n))
        else:
            carriers = draw.designated
    else:
        carriers = tuple(int(i) for i in designated)
        for i in carriers:
            if not draw.carries_alpha(i):
                raise ValueError(
                    f"missing second-order report for designated reporter {i}"
                )
    for i in carriers:
        payments[i] += schedule.second_order_scale * _evaluate(
            schedule.second_order_rule, draw.second_order[i], realized
        )
    return payments


def _denoise(gain: float) -> float:
    return 0.0 if abs(gain) < GAIN_NOISE_FLOOR else float(gain)


def simplex_grid(num_states: int, resolution: int) -> np.ndarray:
    """All probability vectors over ``num_states`` states whose components are
    integer multiples of 1/resolution."""
    if num_states < 1 or resolution < 1:
        raise ValueError("need at least one state and resolution >= 1")
    points: list[tuple[int, ...]] = []

    def fill(prefix: tuple[int, ...], remaining: int, slots: int) -> None:
        if slots == 1:
            points.append(prefix + (remaining,))
            return
        for head in range(remaining + 1):
            fill(prefix + (head,), remaining - head, slots - 1)

    fill((), resolution, num_states)
    return np.array(points, dtype=float) / resolution


@dataclass(frozen=True)
class TruthfulnessReport:
    """Largest expected gain any grid deviation achieves over truthful
    reporting, per signal and overall (nonpositive for proper rules)."""

    signals: tuple[str, ...]
    first_order_gains: tuple[float, ...]
    second_order_gains: tuple[float, ...]
    max_gain: float
    grid: float

    @property
    def truthful(self) -> bool:
        return self.max_gain <= 0.0


#: Expected-score differences below this are floating-point noise, not real
#: incentives (grid deviations move scores by at least the squared grid step).
GAIN_NOISE_FLOOR = 1e-12


def truthfulness_check(
    structure: InfoStructure,
    rule,
    grid: float,
) -> TruthfulnessReport:
    """Exhaustively test whether unilateral grid deviations ever beat truth.

    For each signal, every simplex-grid point is tried as a deviation of the
    first-order report (scored against the state, distributed as the truthful
    posterior) and of the second-order report (scored against the realized
    population average, which in the large-population limit equals the
    state-conditional mean column).  Gains are relative to the exact truthful
    reports, which need not lie on the grid; gains smaller in magnitude than
    ``GAIN_NOISE_FLOOR`` are reported as exactly zero, since the evaluation
    cannot resolve them.
    """
    if not 0.0 < grid <= 1.0:
        raise ValueError(f"grid step must be in (0, 1], got {grid!r}")
    resolution = max(1, round(1.0 / grid))
    L = structure.num_states
    points = simplex_grid(L, resolution)
    Q = posterior_matrix(structure)
    means = expected_belief_matrix(structure)
    columns = [means.entries[:, w] for w in range(L)]

    fo_gains: list[float] = []
    so_gains: list[float] = []
    for k in range(structure.num_signals):
        posterior = Q[k]

        def expected_first(report: np.ndarray) -> float:
            return sum(
                posterior[w] * _evaluate(rule, report, w) for w in range(L)
            )

        def expected_second(report: np.ndarray) -> float:
            return sum(
                posterior[w] * _evaluate(rule, report, columns[w]) for w in range(L)
            )

        truthful_first = expected_first(posterior)
        best_first = max(expected_first(g) for g in points)
        fo_gains.append(_denoise(best_first - truthful_first))

        alpha = means.entries @ posterior
        truthful_second = expected_second(alpha)
        best_second = max(expected_second(g) for g in points)
        so_gains.append(_denoise(best_second - truthful_second))

    return TruthfulnessReport(
        signals=structure.signals,
        first_order_gains=tuple(fo_gains),
        second_order_gains=tuple(so_gains),
        max_gain=max(fo_gains + so_gains),
        grid=grid,
    )
