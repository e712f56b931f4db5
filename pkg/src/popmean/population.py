"""Synthetic agent populations: correlated signal draws and reports.

Draws are stored as dense arrays (one row per agent) so that Monte Carlo
sweeps over tens of millions of agents stay cheap; the per-agent
:class:`AgentReport` view is materialized lazily for small populations and
golden tests.  All randomness flows through counter-based generators seeded
per purpose, so agent ``i``'s draw does not depend on the population size.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Sequence

import numpy as np

from .errors import MisspecOverlapError
from .model import (
    BeliefVector,
    ExpectedBeliefMatrix,
    InfoStructure,
    StateSpace,
    _belief_array,
    posterior_matrix,
)

__all__ = [
    "CorrelationSpec",
    "MisspecSpec",
    "AgentReport",
    "PopulationDraw",
    "sample_population",
    "truthful_alpha",
    "misspecified_alpha",
    "misspecified_alpha_batch",
    "vote",
    "vote_share_matrix",
    "expected_vote_shares",
    "write_population_csv",
]


def _generator(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator for one purpose-specific stream of a seed."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,)))
    )


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationSpec:
    """How agents' signals correlate conditional on the state.

    ``iid`` draws every agent independently; ``block`` partitions agents into
    consecutive blocks of ``block_size`` sharing a single draw, the finite
    stand-in for limited correlation.
    """

    kind: str = "iid"
    block_size: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("iid", "block"):
            raise ValueError(f"correlation kind must be 'iid' or 'block', got {self.kind!r}")
        if int(self.block_size) != self.block_size or self.block_size < 1:
            raise ValueError(f"block_size must be a positive integer, got {self.block_size!r}")
        object.__setattr__(self, "block_size", int(self.block_size))

    @property
    def effective_block(self) -> int:
        return self.block_size if self.kind == "block" else 1


@dataclass(frozen=True)
class MisspecSpec:
    """Additive noise on agents' knowledge of the state-conditional means.

    ``half_width`` bounds the uniform zero-mean error added per state; with
    ``guard`` on, the half-width must stay below half the minimum gap between
    mean columns so that perturbed means remain attributable to their state.
    """

    half_width: float
    guard: bool = True

    def __post_init__(self) -> None:
        if self.half_width < 0.0:
            raise ValueError("half_width must be nonnegative")

    def check_against(self, means: ExpectedBeliefMatrix) -> None:
        if not self.guard:
            return
        limit = means.min_column_gap() / 2.0
        if self.half_width >= limit:
            raise MisspecOverlapError(
                "misspecification overlaps state means: half_width "
                f"{self.half_width} is not below half the minimum column gap {limit}"
            )


@dataclass(frozen=True)
class AgentReport:
    """One agent's elicited reports: belief, optional second-order expectation,
    optional vote (a state label)."""

    first_order: BeliefVector
    second_order: BeliefVector | None = None
    vote: str | None = None


@dataclass(frozen=True, eq=False)
class PopulationDraw:
    """A sampled population: signals and truthful reports for ``n`` agents.

    ``second_order`` rows are meaningful for the ``designated`` agent indices
    (all agents when ``designated`` is None).  ``reports`` materializes
    per-agent objects and is intended for small populations; numeric code
    should use the arrays directly.
    """

    structure: InfoStructure
    true_state: str
    signal_indices: np.ndarray
    first_order: np.ndarray
    seed: int
    second_order: np.ndarray | None = None
    designated: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        signal_indices = np.asarray(self.signal_indices, dtype=np.int64)
        first_order = np.asarray(self.first_order, dtype=float)
        if first_order.shape != (signal_indices.shape[0], self.structure.num_states):
            raise ValueError("first_order must be (n, L) aligned with signal_indices")
        if self.second_order is not None:
            second = np.asarray(self.second_order, dtype=float)
            if second.shape != first_order.shape:
                raise ValueError("second_order must match first_order's shape")
            object.__setattr__(self, "second_order", second)
        if self.designated is not None:
            if self.second_order is None:
                raise ValueError("designated reporters require second_order data")
            designated = tuple(int(i) for i in self.designated)
            if any(i < 0 or i >= signal_indices.shape[0] for i in designated):
                raise ValueError("designated indices out of range")
            object.__setattr__(self, "designated", designated)
        object.__setattr__(self, "signal_indices", signal_indices)
        object.__setattr__(self, "first_order", first_order)
        self.structure.states.index(self.true_state)

    @property
    def n(self) -> int:
        return int(self.signal_indices.shape[0])

    @cached_property
    def signals(self) -> tuple[str, ...]:
        names = self.structure.signals
        return tuple(names[i] for i in self.signal_indices)

    @cached_property
    def votes(self) -> np.ndarray:
        """Per-agent argmax state indices (ties to the lowest index)."""
        out = np.argmax(self.first_order, axis=1)
        out.setflags(write=False)
        return out

    def carries_alpha(self, index: int) -> bool:
        if self.second_order is None:
            return False
        return self.designated is None or index in self.designated

    @cached_property
    def reports(self) -> tuple[AgentReport, ...]:
        labels = self.structure.states.labels
        out = []
        for i in range(self.n):
            second = None
            if self.carries_alpha(i):
                second = BeliefVector(tuple(self.second_order[i]))
            out.append(
                AgentReport(
                    first_order=BeliefVector(tuple(self.first_order[i])),
                    second_order=second,
                    vote=labels[int(self.votes[i])],
                )
            )
        return tuple(out)

    def replace(self, **changes) -> "PopulationDraw":
        """Copy with fields replaced (used to attach second-order data)."""
        fields = {
            "structure": self.structure,
            "true_state": self.true_state,
            "signal_indices": self.signal_indices,
            "first_order": self.first_order,
            "seed": self.seed,
            "second_order": self.second_order,
            "designated": self.designated,
        }
        fields.update(changes)
        return PopulationDraw(**fields)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _draw_from(cumulative: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cumulative, uniforms, side="right")
    return np.minimum(idx, len(cumulative) - 1)


def sample_population(
    structure: InfoStructure,
    corr: CorrelationSpec,
    n: int,
    true_state: str | None = None,
    seed: int = 0,
) -> PopulationDraw:
    """Draw ``n`` agents' signals conditional on the state and fill in
    truthful first-order reports.

    When ``true_state`` is omitted it is drawn from the prior.  Identical
    seeds give identical draws, and because uniforms are generated
    position-by-position, the first agents of a larger draw coincide with a
    smaller draw at the same seed.
    """
    if n < 1:
        raise ValueError("population size must be at least 1")
    if true_state is None:
        state_rng = _generator(seed, 0)
        cumulative = np.cumsum(structure.prior)
        state_idx = int(_draw_from(cumulative, np.array([state_rng.random()]))[0])
        true_state = structure.states.labels[state_idx]
    else:
        state_idx = structure.states.index(true_state)

    block = corr.effective_block
    num_draws = -(-n // block)  # ceil division
    signal_rng = _generator(seed, 1)
    uniforms = signal_rng.random(num_draws)
    cumulative = np.cumsum(structure.likelihood[:, state_idx])
    draws = _draw_from(cumulative, uniforms)
    agent_signals = draws[np.arange(n) // block]

    Q = posterior_matrix(structure)
    first_order = Q[agent_signals]
    return PopulationDraw(
        structure=structure,
        true_state=true_state,
        signal_indices=agent_signals,
        first_order=first_order,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def truthful_alpha(
    first_order: BeliefVector | Sequence[float] | np.ndarray,
    means: ExpectedBeliefMatrix,
) -> BeliefVector:
    """Expectation of the population-average belief implied by one's own belief:
    the convex combination of mean columns weighted by ``first_order``."""
    weights = _belief_array(first_order)
    return BeliefVector(tuple(means.entries @ weights))


def _tilt_matrix(L: int) -> np.ndarray:
    """Row ``w`` is the zero-sum direction along which column ``w`` is perturbed:
    +1 on the own component, -1/(L-1) elsewhere."""
    off = -1.0 / (L - 1)
    tilt = np.full((L, L), off)
    np.fill_diagonal(tilt, 1.0)
    return tilt


def misspecified_alpha_batch(
    first_orders: np.ndarray,
    means: ExpectedBeliefMatrix,
    spec: MisspecSpec,
    seed: int,
) -> np.ndarray:
    """Vectorized misspecified second-order reports, one row per agent.

    Each agent/state pair gets an independent uniform draw on
    [-half_width, +half_width]; state ``w``'s mean column is shifted along a
    zero-sum direction by that amount before the agent combines columns with
    their own belief weights.  Rows pushed off the simplex by more than 1e-12
    are clamped and renormalized.
    """
    spec.check_against(means)
    first_orders = np.asarray(first_orders, dtype=float)
    n, L = first_orders.shape
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    zeta = (2.0 * rng.random((n, L)) - 1.0) * spec.half_width
    truthful = first_orders @ means.entries.T
    alphas = truthful + (first_orders * zeta) @ _tilt_matrix(L)
    low = alphas.min(axis=1)
    bad = low < -1e-12
    if np.any(bad):
        clipped = np.clip(alphas[bad], 0.0, None)
        alphas[bad] = clipped / clipped.sum(axis=1, keepdims=True)
    return alphas


def misspecified_alpha(
    first_order: BeliefVector | Sequence[float] | np.ndarray,
    means: ExpectedBeliefMatrix,
    spec: MisspecSpec,
    seed: int,
) -> BeliefVector:
    """Single-agent misspecified second-order report (see the batch variant)."""
    row = _belief_array(first_order)[None, :]
    out = misspecified_alpha_batch(row, means, spec, seed)
    return BeliefVector(tuple(out[0]))


def vote(
    first_order: BeliefVector | Sequence[float] | np.ndarray,
    states: StateSpace | None = None,
) -> int | str:
    """State the agent considers most likely; ties go to the lowest index.

    Returns the state index, or the label when ``states`` is given.
    """
    weights = _belief_array(first_order)
    idx = int(np.argmax(weights))
    return states.labels[idx] if states is not None else idx


def vote_share_matrix(structure: InfoStructure) -> np.ndarray:
    """``S[k][w]``: probability an agent votes for state ``k`` in state ``w``
    (total likelihood of the signals whose posterior argmax is ``k``)."""
    Q = posterior_matrix(structure)
    votes = np.argmax(Q, axis=1)
    L = structure.num_states
    S = np.zeros((L, L))
    for s in range(structure.num_signals):
        S[votes[s]] += structure.likelihood[s]
    return S


def expected_vote_shares(structure: InfoStructure, signal: str) -> BeliefVector:
    """An agent's expectation of population vote shares given their signal:
    state-conditional vote shares averaged under the agent's posterior."""
    Q = posterior_matrix(structure)
    idx = structure.signal_index(signal)
    shares = vote_share_matrix(structure) @ Q[idx]
    return BeliefVector(tuple(shares))


# ---------------------------------------------------------------------------
# dumps
# ---------------------------------------------------------------------------

def write_population_csv(
    draw: PopulationDraw,
    destination: str | IO[str],
    include_votes: bool = False,
    payments: Sequence[float] | None = None,
) -> None:
    """Write one row per agent: index, signal, belief components, optional
    second-order components, optional vote and payment columns.  Headers name
    the states."""
    labels = draw.structure.states.labels
    header = ["agent", "signal"] + [f"mu_{w}" for w in labels]
    has_alpha = draw.second_order is not None
    if has_alpha:
        header += [f"alpha_{w}" for w in labels]
    if include_votes:
        header.append("vote")
    if payments is not None:
        if len(payments) != draw.n:
            raise ValueError("payments must have one entry per agent")
        header.append("payment")

    def emit(handle: IO[str]) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for i in range(draw.n):
            row: list[str] = [str(i), draw.signals[i]]
            row += [f"{x:.10g}" for x in draw.first_order[i]]
            if has_alpha:
                if draw.carries_alpha(i):
                    row += [f"{x:.10g}" for x in draw.second_order[i]]
                else:
                    row += ["" for _ in labels]
            if include_votes:
                row.append(labels[int(draw.votes[i])])
            if payments is not None:
                row.append(f"{payments[i]:.10g}")
            writer.writerow(row)

    if isinstance(destination, str):
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            emit(handle)
    else:
        emit(destination)
