"""Aggregation procedures that recover the state from population reports.

The family of population-mean procedures all share one linear step: designated
reporters state their own belief and their expectation of a population
average; stacking beliefs into ``B`` and expectations into ``A`` and solving
``B X = A`` yields ``X`` whose columns (after transposition) are the
state-conditional population averages.  The realized population average is
then matched to the nearest column in max norm.  The same machinery runs on
belief averages (binary, multi-state, limited-information variants) and on
vote shares (action variant).

Surprisingly-popular style procedures are provided for comparison: the binary
form is sound, while ``sp_sets`` and ``prediction_normalized_votes`` expose
how the multi-state generalizations can flag the wrong state.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._linalg import greedy_independent_rows
from .errors import (
    AmbiguousMatchError,
    DegenerateGroupingError,
    DegenerateReporterError,
    HerdingError,
    NoSurpriseError,
    RankDeficientError,
    UndefinedNormalizationError,
)
from .model import BeliefVector, ExpectedBeliefMatrix, StateSpace, _belief_array
from .population import AgentReport, PopulationDraw

__all__ = [
    "AggregationOutcome",
    "SpVerdict",
    "monte_carlo_tolerance",
    "solve_state_means",
    "match_state",
    "pmba_binary",
    "pmba_multi",
    "action_pmba",
    "limited_info_pmba",
    "surprisingly_popular",
    "most_surprisingly_popular",
    "sp_sets",
    "prediction_normalized_votes",
]

#: Default gap below which the two best column matches count as ambiguous.
NOISELESS_AMBIGUITY_TOL = 1e-6

#: Reporter beliefs closer than this (max norm) cannot be inverted reliably.
SEPARATION_TOL = 1e-9


def monte_carlo_tolerance(num_states: int, population_size: int) -> float:
    """Ambiguity tolerance for finite populations: three concentration-scale
    standard deviations, 3*sqrt(L/n)."""
    return 3.0 * float(np.sqrt(num_states / population_size))


# ---------------------------------------------------------------------------
# outcome types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AggregationOutcome:
    """Result of one aggregation run.

    ``recovered_means`` holds the solved state-conditional averages (belief
    averages, or vote shares for the action variant); ``population_mean`` is
    the realized average that was matched against its columns.
    """

    recovered_state: str
    recovered_means: ExpectedBeliefMatrix
    population_mean: BeliefVector
    match_distance: float
    runner_up_distance: float
    condition_number: float
    procedure: str = ""
    column_distances: tuple[float, ...] = ()
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.match_distance > self.runner_up_distance:
            raise ValueError("match_distance must not exceed runner_up_distance")

    def to_record(self) -> dict[str, object]:
        """Flat key/value view: state, per-column distances, conditioning."""
        record: dict[str, object] = {
            "procedure": self.procedure,
            "recovered_state": self.recovered_state,
            "match_distance": self.match_distance,
            "runner_up_distance": self.runner_up_distance,
            "condition_number": self.condition_number,
        }
        for label, dist in zip(self.recovered_means.states.labels, self.column_distances):
            record[f"distance_{label}"] = dist
        if self.seed is not None:
            record["seed"] = self.seed
        return record


@dataclass(frozen=True)
class SpVerdict:
    """Which states look surprisingly popular: realized average above the
    reporter's expectation, with per-state margins."""

    sp_states: frozenset
    most_surprising: str | int | None
    margins: Mapping

    def __post_init__(self) -> None:
        if self.sp_states and self.most_surprising not in self.sp_states:
            raise ValueError("most_surprising must belong to sp_states when nonempty")


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

def _default_states(L: int) -> StateSpace:
    return StateSpace(tuple(f"w{i + 1}" for i in range(L)))


@dataclass(frozen=True)
class _Reports:
    """Uniform array view over a PopulationDraw or a sequence of AgentReports."""

    states: StateSpace
    first_order: np.ndarray
    second_order: np.ndarray | None
    carriers: tuple[int, ...]
    votes: np.ndarray

    @property
    def n(self) -> int:
        return int(self.first_order.shape[0])


def _extract(
    reports: PopulationDraw | Sequence[AgentReport],
    states: StateSpace | None,
) -> _Reports:
    if isinstance(reports, PopulationDraw):
        draw = reports
        resolved = states if states is not None else draw.structure.states
        carriers: tuple[int, ...]
        if draw.second_order is None:
            carriers = ()
        elif draw.designated is None:
            carriers = tuple(range(draw.n))
        else:
            carriers = draw.designated
        return _Reports(
            states=resolved,
            first_order=draw.first_order,
            second_order=draw.second_order,
            carriers=carriers,
            votes=np.asarray(draw.votes),
        )

    reports = list(reports)
    if not reports:
        raise ValueError("at least one report is required")
    first = np.array([_belief_array(r.first_order) for r in reports], dtype=float)
    L = first.shape[1]
    resolved = states if states is not None else _default_states(L)
    second = np.zeros_like(first)
    carriers = []
    for i, r in enumerate(reports):
        if r.second_order is not None:
            carriers.append(i)
            second[i] = _belief_array(r.second_order)
    votes = np.empty(len(reports), dtype=np.int64)
    for i, r in enumerate(reports):
        if r.vote is not None:
            votes[i] = resolved.index(r.vote)
        else:
            votes[i] = int(np.argmax(first[i]))
    return _Reports(
        states=resolved,
        first_order=first,
        second_order=second if carriers else None,
        carriers=tuple(carriers),
        votes=votes,
    )


def _resolve_mean(
    override: BeliefVector | Sequence[float] | np.ndarray | None,
    data: _Reports,
) -> np.ndarray:
    if override is not None:
        return np.asarray(
            override.components if isinstance(override, BeliefVector) else override,
            dtype=float,
        )
    return data.first_order.mean(axis=0)


def solve_state_means(
    reporter_beliefs: np.ndarray,
    reporter_expectations: np.ndarray,
    states: StateSpace,
    atol: float = 1e-6,
    singular_error: type[Exception] = RankDeficientError,
    singular_message: str = "rank-deficient population",
) -> tuple[ExpectedBeliefMatrix, float]:
    """Solve ``B X = A`` for the state-conditional averages.

    Rows of ``reporter_beliefs`` are the reporters' own beliefs; rows of
    ``reporter_expectations`` are their expectations of the population
    average.  Column ``w`` of the result is the recovered average conditional
    on state ``w``, renormalized to sum to one so that matching is scale-free.
    """
    B = np.asarray(reporter_beliefs, dtype=float)
    A = np.asarray(reporter_expectations, dtype=float)
    if B.shape != A.shape or B.shape[0] != B.shape[1]:
        raise ValueError("reporter beliefs and expectations must be square and aligned")
    condition = float(np.linalg.cond(B))
    try:
        solved = np.linalg.solve(B, A)
    except np.linalg.LinAlgError:
        raise singular_error(f"{singular_message}: reporter belief matrix is singular")
    entries = solved.T
    sums = entries.sum(axis=0)
    if np.any(sums <= 0):
        raise singular_error(
            f"{singular_message}: recovered averages are not renormalizable"
        )
    entries = entries / sums
    means = ExpectedBeliefMatrix(entries=entries, states=states, atol=atol)
    return means, condition


def match_state(
    target: np.ndarray,
    means: ExpectedBeliefMatrix,
    ambiguity_tol: float,
) -> tuple[int, tuple[float, ...]]:
    """Nearest column to ``target`` in max norm; the best match must beat the
    runner-up by at least ``ambiguity_tol``."""
    target = np.asarray(target, dtype=float)
    total = target.sum()
    if total <= 0:
        raise ValueError("population average must have positive total mass")
    target = target / total
    distances = np.max(np.abs(means.entries - target[:, None]), axis=0)
    order = np.argsort(distances, kind="stable")
    best = int(order[0])
    if len(order) > 1:
        gap = float(distances[order[1]] - distances[best])
        if gap < ambiguity_tol:
            raise AmbiguousMatchError(
                "ambiguous state match: best two columns are "
                f"{distances[best]:.6g} and {distances[order[1]]:.6g} apart "
                f"(tolerance {ambiguity_tol:.6g})"
            )
    return best, tuple(float(d) for d in distances)


def _outcome(
    procedure: str,
    means: ExpectedBeliefMatrix,
    realized: np.ndarray,
    condition: float,
    ambiguity_tol: float,
    seed: int | None,
) -> AggregationOutcome:
    best, distances = match_state(realized, means, ambiguity_tol)
    ordered = sorted(distances)
    runner_up = ordered[1] if len(ordered) > 1 else ordered[0]
    return AggregationOutcome(
        recovered_state=means.states.labels[best],
        recovered_means=means,
        population_mean=BeliefVector(tuple(realized / realized.sum())),
        match_distance=ordered[0],
        runner_up_distance=runner_up,
        condition_number=condition,
        procedure=procedure,
        column_distances=distances,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# population-mean procedures
# ---------------------------------------------------------------------------

def pmba_binary(
    reports: PopulationDraw | Sequence[AgentReport],
    population_mean: BeliefVector | Sequence[float] | np.ndarray | None = None,
    states: StateSpace | None = None,
    ambiguity_tol: float = NOISELESS_AMBIGUITY_TOL,
    separation_tol: float = SEPARATION_TOL,
    seed: int | None = None,
) -> AggregationOutcome:
    """Two-state aggregation from two second-order reporters.

    The two agents carrying second-order reports must hold distinct beliefs;
    their (belief, expectation) pairs pin down both state-conditional average
    beliefs, and the realized population average (or the ``population_mean``
    override in the exact large-population limit) selects the state.
    """
    data = _extract(reports, states)
    if len(data.states) != 2:
        raise ValueError("pmba_binary requires exactly two states")
    if len(data.carriers) != 2:
        raise ValueError(
            f"pmba_binary requires exactly two second-order reporters, got {len(data.carriers)}"
        )
    a, b = data.carriers
    mu_a, mu_b = data.first_order[a], data.first_order[b]
    if np.max(np.abs(mu_a - mu_b)) <= separation_tol:
        raise DegenerateReporterError(
            "degenerate reporter pair: reporter beliefs coincide within "
            f"{separation_tol:.6g}"
        )
    beliefs = np.vstack([mu_a, mu_b])
    expectations = np.vstack([data.second_order[a], data.second_order[b]])
    means, condition = solve_state_means(
        beliefs,
        expectations,
        data.states,
        singular_error=DegenerateReporterError,
        singular_message="degenerate reporter pair",
    )
    realized = _resolve_mean(population_mean, data)
    return _outcome("pmba_binary", means, realized, condition, ambiguity_tol, seed)


def pmba_multi(
    reports: PopulationDraw | Sequence[AgentReport],
    L_reporters: Sequence[int] | str = "auto",
    population_mean: BeliefVector | Sequence[float] | np.ndarray | None = None,
    states: StateSpace | None = None,
    ambiguity_tol: float = NOISELESS_AMBIGUITY_TOL,
    seed: int | None = None,
) -> AggregationOutcome:
    """L-state aggregation from L independent second-order reporters.

    ``L_reporters`` is either explicit agent indices or ``"auto"``, which
    scans second-order carriers in index order and keeps agents whose belief
    rows increase the pivoted-elimination rank until L rows are found.
    """
    data = _extract(reports, states)
    L = len(data.states)
    if data.second_order is None:
        raise ValueError("pmba_multi requires second-order reports")

    if isinstance(L_reporters, str):
        if L_reporters != "auto":
            raise ValueError(f"L_reporters must be indices or 'auto', got {L_reporters!r}")
        candidates = list(data.carriers)
        kept_local = greedy_independent_rows(data.first_order[candidates], L)
        if len(kept_local) < L:
            raise RankDeficientError(
                "rank-deficient population: only "
                f"{len(kept_local)} independent belief rows among {len(candidates)} "
                f"second-order reporters, need {L}"
            )
        chosen = [candidates[i] for i in kept_local]
    else:
        chosen = [int(i) for i in L_reporters]
        if len(chosen) != L:
            raise ValueError(f"expected {L} reporter indices, got {len(chosen)}")
        carrier_set = set(data.carriers)
        missing = [i for i in chosen if i not in carrier_set]
        if missing:
            raise ValueError(f"reporters {missing} carry no second-order report")

    beliefs = data.first_order[chosen]
    expectations = data.second_order[chosen]
    means, condition = solve_state_means(beliefs, expectations, data.states)
    realized = _resolve_mean(population_mean, data)
    return _outcome("pmba_multi", means, realized, condition, ambiguity_tol, seed)


def action_pmba(
    reports: PopulationDraw | Sequence[AgentReport],
    realized_shares: BeliefVector | Sequence[float] | np.ndarray | None = None,
    states: StateSpace | None = None,
    ambiguity_tol: float = NOISELESS_AMBIGUITY_TOL,
    seed: int | None = None,
) -> AggregationOutcome:
    """Two-state aggregation from votes instead of beliefs.

    Designated reporters carry their belief and their expectation of the
    population vote shares (in the ``second_order`` slot).  Two reporters with
    opposite votes anchor the inversion; the realized vote shares (or the
    override) select the state.  Recovered columns are state-conditional vote
    shares.
    """
    data = _extract(reports, states)
    if len(data.states) != 2:
        raise ValueError("action_pmba requires exactly two states")
    if data.second_order is None or not data.carriers:
        raise ValueError("action_pmba requires reporters carrying expected vote shares")

    first = data.carriers[0]
    partner = next(
        (i for i in data.carriers[1:] if data.votes[i] != data.votes[first]), None
    )
    if partner is None:
        raise HerdingError(
            "herding detected: no pair of reporters with opposite votes "
            f"({len(data.carriers)} reporters, all voting "
            f"{data.states.labels[int(data.votes[first])]})"
        )

    beliefs = data.first_order[[first, partner]]
    expectations = data.second_order[[first, partner]]
    means, condition = solve_state_means(
        beliefs,
        expectations,
        data.states,
        singular_error=DegenerateReporterError,
        singular_message="degenerate reporter pair",
    )
    if realized_shares is not None:
        realized = np.asarray(
            realized_shares.components
            if isinstance(realized_shares, BeliefVector)
            else realized_shares,
            dtype=float,
        )
    else:
        realized = np.bincount(data.votes, minlength=len(data.states)) / data.n
    return _outcome("action_pmba", means, realized, condition, ambiguity_tol, seed)


def limited_info_pmba(
    reports: PopulationDraw | Sequence[AgentReport],
    states: StateSpace | None = None,
    ambiguity_tol: float = NOISELESS_AMBIGUITY_TOL,
    seed: int | None = None,
) -> AggregationOutcome:
    """Two-state aggregation when every agent reports a belief and a (possibly
    misspecified) second-order expectation.

    Agents are split by whether their first belief component is at most the
    population average's; the two group-average (belief, expectation) pairs
    then play the role of the designated reporters.
    """
    data = _extract(reports, states)
    if len(data.states) != 2:
        raise ValueError("limited_info_pmba requires exactly two states")
    if data.second_order is None or len(data.carriers) != data.n:
        raise ValueError("limited_info_pmba requires second-order reports from every agent")

    realized = data.first_order.mean(axis=0)
    low = data.first_order[:, 0] <= realized[0]
    if not low.any() or low.all():
        raise DegenerateGroupingError(
            "degenerate grouping: every agent fell on one side of the population mean"
        )
    beliefs = np.vstack(
        [data.first_order[low].mean(axis=0), data.first_order[~low].mean(axis=0)]
    )
    expectations = np.vstack(
        [data.second_order[low].mean(axis=0), data.second_order[~low].mean(axis=0)]
    )
    means, condition = solve_state_means(
        beliefs,
        expectations,
        data.states,
        singular_error=DegenerateReporterError,
        singular_message="degenerate reporter pair",
    )
    return _outcome("limited_info_pmba", means, realized, condition, ambiguity_tol, seed)


# ---------------------------------------------------------------------------
# surprisingly-popular comparisons
# ---------------------------------------------------------------------------

def surprisingly_popular(
    population_mean: BeliefVector | Sequence[float] | np.ndarray,
    alpha: BeliefVector | Sequence[float] | np.ndarray,
    states: StateSpace | None = None,
    tol: float = 1e-9,
) -> str | int:
    """Two-state surprisingly-popular rule: declare the state whose realized
    average strictly exceeds the reporter's expectation.

    Returns the state index, or its label when ``states`` is given.
    """
    realized = _belief_array(population_mean)
    expected = _belief_array(alpha)
    if realized.shape != (2,) or expected.shape != (2,):
        raise ValueError("surprisingly_popular requires exactly two states")
    margin = realized[0] - expected[0]
    if abs(margin) <= tol:
        raise NoSurpriseError(
            "no surprise: realized population mean equals the expectation within "
            f"{tol:.6g}"
        )
    idx = 0 if margin > 0 else 1
    return states.labels[idx] if states is not None else idx


def sp_sets(
    realized: BeliefVector | Sequence[float] | np.ndarray,
    alpha: BeliefVector | Sequence[float] | np.ndarray,
    states: StateSpace | None = None,
    tol: float = 1e-9,
) -> SpVerdict:
    """All states whose realized average exceeds the expectation, with margins.

    ``most_surprising`` is the member with the largest margin (None when no
    state qualifies).  States are labeled when ``states`` is given, otherwise
    indexed.
    """
    realized_arr = _belief_array(realized)
    expected_arr = _belief_array(alpha)
    if realized_arr.shape != expected_arr.shape:
        raise ValueError("realized and expected vectors must have equal length")
    names: Sequence = (
        states.labels if states is not None else range(len(realized_arr))
    )
    margins = {name: float(r - e) for name, r, e in zip(names, realized_arr, expected_arr)}
    members = [name for name in names if margins[name] > tol]
    most = max(members, key=lambda name: margins[name]) if members else None
    return SpVerdict(sp_states=frozenset(members), most_surprising=most, margins=margins)


def most_surprisingly_popular(
    realized: BeliefVector | Sequence[float] | np.ndarray,
    alpha: BeliefVector | Sequence[float] | np.ndarray,
    states: StateSpace | None = None,
    tol: float = 1e-9,
) -> str | int:
    """The state with the largest positive realized-minus-expected margin."""
    verdict = sp_sets(realized, alpha, states=states, tol=tol)
    if verdict.most_surprising is None:
        raise NoSurpriseError(
            "no surprise: no state's realized average exceeds its expectation"
        )
    return verdict.most_surprising


def prediction_normalized_votes(
    vote_shares: BeliefVector | Sequence[float] | np.ndarray,
    predicted: np.ndarray,
) -> np.ndarray:
    """Vote shares normalized by predicted cross-votes.

    ``predicted[j][k]`` is the vote share for state k predicted by a voter for
    state j; state j's score divides its realized vote share by
    ``sum_k predicted[j][k] / predicted[k][j]``.  All predicted entries must
    be strictly positive.
    """
    shares = _belief_array(vote_shares)
    V = np.asarray(predicted, dtype=float)
    L = shares.shape[0]
    if V.shape != (L, L):
        raise ValueError("predicted vote-share matrix must be square and aligned")
    if np.any(V <= 0):
        raise UndefinedNormalizationError(
            "undefined normalization: predicted vote shares must be strictly positive"
        )
    ratios = (V / V.T).sum(axis=1)
    return shares / ratios
