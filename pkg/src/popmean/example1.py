"""Embedded three-state demonstration tables and their golden reproduction.

The tables give, for three states and three signals, each signal's posterior
belief and each state's signal distribution.  From those two tables alone the
package recomputes the expected population-mean matrix, the designated
reporters' expectations, the surprisingly-popular verdict grid, and the
prediction-normalized vote scores, then compares everything against the
published reference values.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .aggregate import SpVerdict, prediction_normalized_votes, sp_sets
from .model import (
    ExpectedBeliefMatrix,
    InfoStructure,
    StateSpace,
    expected_belief_matrix,
    posterior_matrix,
)

__all__ = [
    "EXAMPLE1_STATES",
    "EXAMPLE1_SIGNALS",
    "EXAMPLE1_POSTERIOR",
    "EXAMPLE1_LIKELIHOOD",
    "PUBLISHED_MEAN_TABLE",
    "PUBLISHED_ALPHA_TABLE",
    "PUBLISHED_SP_GRID",
    "REFERENCE_SCORES",
    "DEFAULT_TOLERANCE",
    "Example1Report",
    "TableCheck",
    "GridCheck",
    "example1_structure",
    "reproduce_example1",
]

EXAMPLE1_STATES = ("w1", "w2", "w3")
EXAMPLE1_SIGNALS = ("s1", "s2", "s3")

#: Row k is signal s_{k+1}'s posterior over (w1, w2, w3).
EXAMPLE1_POSTERIOR = np.array(
    [
        [0.40, 0.21, 0.39],
        [0.45, 0.54, 0.01],
        [0.44, 0.06, 0.50],
    ]
)

#: Column j is state w_{j+1}'s distribution over signals (s1, s2, s3).
EXAMPLE1_LIKELIHOOD = np.array(
    [
        [0.310, 0.259, 0.433],
        [0.349, 0.667, 0.011],
        [0.341, 0.074, 0.556],
    ]
)

#: Published expected population-mean matrix, rounded to three decimals:
#: entry [i][j] is the average belief in w_{i+1} when the state is w_{j+1}.
PUBLISHED_MEAN_TABLE = np.array(
    [
        [0.431, 0.436, 0.422],
        [0.274, 0.419, 0.130],
        [0.295, 0.145, 0.447],
    ]
)

#: Published designated-reporter expectations, rounded to three decimals:
#: column k is the expectation of a reporter who saw signal s_{k+1}.
PUBLISHED_ALPHA_TABLE = np.array(
    [
        [0.429, 0.434, 0.427],
        [0.248, 0.351, 0.211],
        [0.323, 0.215, 0.362],
    ]
)

#: Published verdict grid: (reporter signal, true state) -> (surprisingly
#: popular states, the most surprising of them).  In every multi-state cell
#: the most surprising state is w2, and the (s2, w1) cell misses the true
#: state entirely.
PUBLISHED_SP_GRID: Mapping[tuple[str, str], tuple[frozenset[str], str]] = {
    ("s1", "w1"): (frozenset({"w1", "w2"}), "w2"),
    ("s1", "w2"): (frozenset({"w1", "w2"}), "w2"),
    ("s1", "w3"): (frozenset({"w3"}), "w3"),
    ("s2", "w1"): (frozenset({"w3"}), "w3"),
    ("s2", "w2"): (frozenset({"w1", "w2"}), "w2"),
    ("s2", "w3"): (frozenset({"w3"}), "w3"),
    ("s3", "w1"): (frozenset({"w1", "w2"}), "w2"),
    ("s3", "w2"): (frozenset({"w1", "w2"}), "w2"),
    ("s3", "w3"): (frozenset({"w3"}), "w3"),
}

#: Frozen prediction-normalized vote scores under true state w1, computed once
#: from the unrounded tables.  score(w2) > score(w1): the normalization picks
#: the wrong state.
REFERENCE_SCORES = (0.1032688057242453, 0.116391660291798, 0.11368065362085514)

DEFAULT_TOLERANCE = 0.002


def example1_structure() -> InfoStructure:
    """The demonstration tables as a replay-mode information structure.

    The posterior table is carried verbatim (it is rounded, so it is not the
    exact Bayes posterior of any prior for the likelihood table); the uniform
    prior is a placeholder that none of the reproduced quantities consume.
    """
    return InfoStructure(
        states=StateSpace(EXAMPLE1_STATES),
        signals=EXAMPLE1_SIGNALS,
        prior=np.full(3, 1.0 / 3.0),
        likelihood=EXAMPLE1_LIKELIHOOD.copy(),
        posterior_override=EXAMPLE1_POSTERIOR.copy(),
    )


@dataclass(frozen=True)
class TableCheck:
    """One matrix compared entrywise against its published counterpart."""

    name: str
    computed: np.ndarray
    expected: np.ndarray
    tolerance: float

    @property
    def max_error(self) -> float:
        return float(np.abs(self.computed - self.expected).max())

    @property
    def ok(self) -> bool:
        return self.max_error <= self.tolerance


@dataclass(frozen=True)
class GridCheck:
    """The verdict grid compared cell by cell (sets and most-surprising)."""

    computed: Mapping[tuple[str, str], SpVerdict]
    expected: Mapping[tuple[str, str], tuple[frozenset[str], str]]

    @property
    def mismatches(self) -> tuple[tuple[str, str], ...]:
        bad = []
        for cell, (want_set, want_most) in self.expected.items():
            verdict = self.computed[cell]
            if verdict.sp_states != want_set or verdict.most_surprising != want_most:
                bad.append(cell)
        return tuple(bad)

    @property
    def ok(self) -> bool:
        return not self.mismatches


@dataclass(frozen=True)
class Example1Report:
    """Everything ``reproduce_example1`` computed, with per-block verdicts."""

    mean_check: TableCheck
    alpha_check: TableCheck
    sp_check: GridCheck
    scores: tuple[float, ...]
    reference_scores: tuple[float, ...]
    tolerance: float

    @property
    def scores_ok(self) -> bool:
        deviation = max(
            abs(a - b) for a, b in zip(self.scores, self.reference_scores)
        )
        return deviation <= self.tolerance

    @property
    def ranking_ok(self) -> bool:
        """The documented failure: under true state w1, w2 outscores w1."""
        return self.scores[1] > self.scores[0]

    @property
    def passed(self) -> bool:
        return (
            self.mean_check.ok
            and self.alpha_check.ok
            and self.sp_check.ok
            and self.scores_ok
            and self.ranking_ok
        )


def reproduce_example1(tolerance: float = DEFAULT_TOLERANCE) -> Example1Report:
    """Recompute every demonstration quantity and compare to the references.

    ``tolerance`` applies to the numeric tables (the published ones are
    rounded to three decimals, so anything below ~1e-3 must fail); the verdict
    grid is compared exactly as sets.
    """
    structure = example1_structure()
    means: ExpectedBeliefMatrix = expected_belief_matrix(structure)
    Q = posterior_matrix(structure)
    alpha = means.entries @ Q.T

    grid: dict[tuple[str, str], SpVerdict] = {}
    for k, signal in enumerate(EXAMPLE1_SIGNALS):
        for j, state in enumerate(EXAMPLE1_STATES):
            grid[(signal, state)] = sp_sets(
                means.entries[:, j], alpha[:, k], states=structure.states
            )

    scores = prediction_normalized_votes(
        EXAMPLE1_LIKELIHOOD[:, 0], Q @ EXAMPLE1_LIKELIHOOD.T
    )

    return Example1Report(
        mean_check=TableCheck("mean", means.entries, PUBLISHED_MEAN_TABLE, tolerance),
        alpha_check=TableCheck("alpha", alpha, PUBLISHED_ALPHA_TABLE, tolerance),
        sp_check=GridCheck(computed=grid, expected=PUBLISHED_SP_GRID),
        scores=tuple(float(s) for s in scores),
        reference_scores=REFERENCE_SCORES,
        tolerance=tolerance,
    )
