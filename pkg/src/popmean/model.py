"""Finite information structures and exact Bayesian computations.

An :class:`InfoStructure` couples a finite state space with a finite signal
alphabet through a column-stochastic likelihood matrix.  Everything downstream
(population synthesis, aggregation procedures, assumption checks) consumes the
posterior table and the state-conditional mean-belief matrix computed here.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import yaml

from ._linalg import pivoted_rank
from .errors import CompoundSpaceError, UnreachableSignalError

__all__ = [
    "StateSpace",
    "InfoStructure",
    "BeliefVector",
    "ExpectedBeliefMatrix",
    "BeliefDistribution",
    "AssumptionReport",
    "as_belief",
    "bayes_posterior",
    "posterior_matrix",
    "expected_belief_matrix",
    "expected_alpha",
    "belief_distribution",
    "tv_distance",
    "check_assumptions",
    "product_lift",
    "binary_symmetric",
    "load_structure",
    "save_structure",
]

#: Tolerance for belief vectors summing to one.
SIMPLEX_ATOL = 1e-9
#: Tolerance for likelihood columns and priors summing to one.
DISTRIBUTION_ATOL = 1e-12
#: Default pivot threshold for rank decisions.
RANK_TOL = 1e-9
#: Condition number above which a warning is emitted.
CONDITION_WARN = 1e8
#: Default cap on the number of compound signals a product lift may create.
COMPOUND_CAP = 10**6


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateSpace:
    """Ordered labels of the possible states of the world."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise ValueError("a state space needs at least two states")
        if len(set(labels)) != len(labels):
            raise ValueError("state labels must be unique")

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown state {label!r}") from None


@dataclass(frozen=True)
class BeliefVector:
    """A probability distribution over states: nonnegative, sums to one."""

    components: tuple[float, ...]

    def __post_init__(self) -> None:
        comps = tuple(float(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        arr = np.array(comps)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("belief components must form a nonempty vector")
        if np.any(arr < -SIMPLEX_ATOL):
            raise ValueError(f"belief components must be nonnegative, got {comps}")
        total = float(arr.sum())
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise ValueError(f"belief components must sum to 1, got {total!r}")

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> float:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def as_array(self) -> np.ndarray:
        return np.array(self.components)


def as_belief(value: BeliefVector | Sequence[float] | np.ndarray) -> BeliefVector:
    """Coerce a sequence of probabilities into a validated :class:`BeliefVector`."""
    if isinstance(value, BeliefVector):
        return value
    return BeliefVector(tuple(np.asarray(value, dtype=float)))


def _belief_array(value: BeliefVector | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(value, BeliefVector):
        return value.as_array()
    return np.asarray(value, dtype=float)


@dataclass(frozen=True, eq=False)
class InfoStructure:
    """States, signals, a prior, and a column-stochastic likelihood matrix.

    ``likelihood[s][w]`` is the probability of signal ``s`` in state ``w``;
    each column is a distribution over signals.  ``posterior_override``
    replaces the Bayes posterior table verbatim when a data source publishes
    posteriors that are not exactly consistent with its likelihood table
    (replay mode); it is consulted by :func:`bayes_posterior` and everything
    built on top of it.
    """

    states: StateSpace
    signals: tuple[str, ...]
    prior: np.ndarray
    likelihood: np.ndarray
    posterior_override: np.ndarray | None = None

    def __post_init__(self) -> None:
        signals = tuple(str(s) for s in self.signals)
        object.__setattr__(self, "signals", signals)
        if len(signals) < 1:
            raise ValueError("need at least one signal")
        if len(set(signals)) != len(signals):
            raise ValueError("signal names must be unique")

        L, K = len(self.states), len(signals)
        prior = np.array(self.prior, dtype=float)
        likelihood = np.array(self.likelihood, dtype=float)
        if prior.shape != (L,):
            raise ValueError(f"prior must have shape ({L},), got {prior.shape}")
        if likelihood.shape != (K, L):
            raise ValueError(
                f"likelihood must have shape ({K}, {L}), got {likelihood.shape}"
            )
        if np.any(prior < 0.0) or np.any(prior > 1.0):
            raise ValueError("prior entries must lie in [0, 1]")
        if np.any(likelihood < 0.0) or np.any(likelihood > 1.0):
            raise ValueError("likelihood entries must lie in [0, 1]")
        if abs(float(prior.sum()) - 1.0) > DISTRIBUTION_ATOL:
            raise ValueError("prior must sum to 1")
        col_sums = likelihood.sum(axis=0)
        if np.any(np.abs(col_sums - 1.0) > DISTRIBUTION_ATOL):
            raise ValueError("each likelihood column must sum to 1")

        override = self.posterior_override
        if override is not None:
            override = np.array(override, dtype=float)
            if override.shape != (K, L):
                raise ValueError(
                    f"posterior_override must have shape ({K}, {L}), got {override.shape}"
                )
            if np.any(override < 0.0) or np.any(override > 1.0):
                raise ValueError("posterior_override entries must lie in [0, 1]")
            if np.any(np.abs(override.sum(axis=1) - 1.0) > SIMPLEX_ATOL):
                raise ValueError("each posterior_override row must sum to 1")
            override.setflags(write=False)

        prior.setflags(write=False)
        likelihood.setflags(write=False)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "likelihood", likelihood)
        object.__setattr__(self, "posterior_override", override)

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_signals(self) -> int:
        return len(self.signals)

    def signal_index(self, signal: str) -> int:
        try:
            return self.signals.index(signal)
        except ValueError:
            raise ValueError(f"unknown signal {signal!r}") from None


@dataclass(frozen=True, eq=False)
class ExpectedBeliefMatrix:
    """State-conditional mean beliefs: ``entries[i][j]`` is the expected
    population-average belief in state ``i`` when the true state is ``j``.
    Columns are belief vectors."""

    entries: np.ndarray
    states: StateSpace
    atol: float = field(default=SIMPLEX_ATOL, compare=False)

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=float)
        L = len(self.states)
        if entries.shape != (L, L):
            raise ValueError(f"entries must have shape ({L}, {L}), got {entries.shape}")
        if np.any(np.abs(entries.sum(axis=0) - 1.0) > self.atol):
            raise ValueError("each column must sum to 1")
        if np.any(entries < -self.atol) or np.any(entries > 1.0 + self.atol):
            raise ValueError("entries must lie in [0, 1]")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def column(self, j: int) -> np.ndarray:
        """Mean belief vector conditional on the j-th state being true."""
        return self.entries[:, j]

    def min_column_gap(self) -> float:
        """Smallest max-norm distance between any two state-conditional means."""
        cols = self.entries
        L = cols.shape[1]
        gaps = [
            float(np.max(np.abs(cols[:, a] - cols[:, b])))
            for a in range(L)
            for b in range(a + 1, L)
        ]
        return min(gaps)


@dataclass(frozen=True)
class BeliefDistribution:
    """Distribution of an agent's posterior belief conditional on one state."""

    support: tuple[BeliefVector, ...]
    weights: tuple[float, ...]
    state: str

    def __post_init__(self) -> None:
        if len(self.support) != len(self.weights):
            raise ValueError("support and weights must have equal length")
        if abs(sum(self.weights) - 1.0) > SIMPLEX_ATOL:
            raise ValueError("weights must sum to 1")
        keys = {tuple(round(c, 12) for c in bv) for bv in self.support}
        if len(keys) != len(self.support):
            raise ValueError("support points must be distinct")


@dataclass(frozen=True)
class AssumptionReport:
    """Executable checks of the aggregation procedures' standing assumptions.

    ``informative`` records, per pair of states, whether the signal
    distributions are mutually absolutely continuous (no signal possible in
    one state but impossible in the other).  ``tv_distance`` is the exact
    total-variation distance between the induced belief distributions per
    state pair.  ``distinct_means`` is the smallest max-norm gap between
    state-conditional mean beliefs, and ``posterior_rank`` is the pivoted
    elimination rank of the posterior table.
    """

    informative: Mapping[tuple[str, str], bool]
    tv_distance: Mapping[tuple[str, str], float]
    distinct_means: float
    posterior_rank: int
    num_states: int
    num_signals: int
    delta: float

    def passes(self, require_full_rank: bool = True, min_mean_gap: float = 0.0) -> bool:
        """True when every check clears its threshold (used for rejection sampling)."""
        if not all(self.informative.values()):
            return False
        if min(self.tv_distance.values()) < self.delta:
            return False
        if self.distinct_means <= min_mean_gap:
            return False
        if require_full_rank and self.posterior_rank < self.num_states:
            return False
        return True


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def _signal_marginals(structure: InfoStructure) -> np.ndarray:
    return structure.likelihood @ structure.prior


def bayes_posterior(structure: InfoStructure, signal: str) -> BeliefVector:
    """Posterior over states after observing ``signal``.

    Computed as ``likelihood[signal] * prior`` renormalized; when the
    structure carries a ``posterior_override`` table the corresponding row is
    returned verbatim instead.
    """
    idx = structure.signal_index(signal)
    marginal = float(_signal_marginals(structure)[idx])
    if marginal <= 0.0:
        raise UnreachableSignalError(
            f"unreachable signal: {signal!r} has zero marginal probability"
        )
    if structure.posterior_override is not None:
        return BeliefVector(tuple(structure.posterior_override[idx]))
    weights = structure.likelihood[idx] * structure.prior
    return BeliefVector(tuple(weights / marginal))


def posterior_matrix(structure: InfoStructure) -> np.ndarray:
    """K×L table whose row ``s`` is ``bayes_posterior(structure, s)``."""
    rows = [bayes_posterior(structure, s).components for s in structure.signals]
    out = np.array(rows, dtype=float)
    out.setflags(write=False)
    return out


def expected_belief_matrix(structure: InfoStructure) -> ExpectedBeliefMatrix:
    """State-conditional expected population-average beliefs.

    ``entry[i][j] = sum_s likelihood[s][j] * posterior[s][i]``: in state j the
    population's signals arrive with frequencies given by column j, and every
    holder of signal s reports the posterior row s.
    """
    Q = posterior_matrix(structure)
    entries = Q.T @ structure.likelihood
    return ExpectedBeliefMatrix(entries=entries, states=structure.states)


def expected_alpha(structure: InfoStructure, signal: str) -> BeliefVector:
    """An agent's expectation of the population-average belief given their signal.

    By iterated expectations this is the convex combination of the
    state-conditional mean columns weighted by the agent's own posterior.
    """
    posterior = bayes_posterior(structure, signal).as_array()
    means = expected_belief_matrix(structure)
    return BeliefVector(tuple(means.entries @ posterior))


def belief_distribution(structure: InfoStructure, state: str) -> BeliefDistribution:
    """Distribution of the posterior belief conditional on ``state``.

    Signals inducing identical posteriors are merged into one support point.
    """
    j = structure.states.index(state)
    Q = posterior_matrix(structure)
    merged: dict[tuple[float, ...], float] = {}
    points: dict[tuple[float, ...], tuple[float, ...]] = {}
    for s in range(structure.num_signals):
        weight = float(structure.likelihood[s, j])
        if weight <= 0.0:
            continue
        key = tuple(round(c, 12) for c in Q[s])
        merged[key] = merged.get(key, 0.0) + weight
        points.setdefault(key, tuple(Q[s]))
    support = tuple(BeliefVector(points[k]) for k in merged)
    weights = tuple(merged.values())
    return BeliefDistribution(support=support, weights=weights, state=state)


def tv_distance(a: BeliefDistribution, b: BeliefDistribution) -> float:
    """Exact total-variation distance: half the L1 gap on the merged support."""
    def keyed(dist: BeliefDistribution) -> dict[tuple[float, ...], float]:
        return {
            tuple(round(c, 12) for c in point): weight
            for point, weight in zip(dist.support, dist.weights)
        }

    wa, wb = keyed(a), keyed(b)
    keys = set(wa) | set(wb)
    return 0.5 * sum(abs(wa.get(k, 0.0) - wb.get(k, 0.0)) for k in keys)


def check_assumptions(
    structure: InfoStructure, delta: float = 0.0, rank_tol: float = RANK_TOL
) -> AssumptionReport:
    """Evaluate the aggregation assumptions on a structure.

    Always returns a report; use :meth:`AssumptionReport.passes` to gate on
    it.  A posterior table with condition number above ``1e8`` triggers a
    warning because downstream solves against nearly dependent beliefs are
    unreliable.
    """
    labels = structure.states.labels
    L = len(labels)
    M = structure.likelihood

    informative: dict[tuple[str, str], bool] = {}
    for i in range(L):
        for j in range(i + 1, L):
            zero_i = M[:, i] == 0.0
            zero_j = M[:, j] == 0.0
            informative[(labels[i], labels[j])] = bool(np.all(zero_i == zero_j))

    dists = {state: belief_distribution(structure, state) for state in labels}
    tv: dict[tuple[str, str], float] = {}
    for i in range(L):
        for j in range(i + 1, L):
            tv[(labels[i], labels[j])] = tv_distance(dists[labels[i]], dists[labels[j]])

    means = expected_belief_matrix(structure)
    Q = posterior_matrix(structure)
    rank = pivoted_rank(Q, tol=rank_tol)
    if rank == L:
        condition = float(np.linalg.cond(Q))
        if condition > CONDITION_WARN:
            warnings.warn(
                f"posterior table condition number {condition:.3g} exceeds "
                f"{CONDITION_WARN:.0e}; solves against these beliefs may be unstable",
                RuntimeWarning,
                stacklevel=2,
            )

    return AssumptionReport(
        informative=informative,
        tv_distance=tv,
        distinct_means=means.min_column_gap(),
        posterior_rank=rank,
        num_states=L,
        num_signals=structure.num_signals,
        delta=delta,
    )


def product_lift(
    structure: InfoStructure, k: int, cap: int = COMPOUND_CAP
) -> InfoStructure:
    """Structure on compound signals of ``k`` conditionally independent draws.

    The likelihood of a compound signal is the product of the per-draw
    likelihoods.  Any ``posterior_override`` is dropped: posteriors on the
    compound space are recomputed from the lifted likelihood.
    """
    if k < 1:
        raise ValueError("draw count must be at least 1")
    if k == 1:
        return structure
    K = structure.num_signals
    if K**k > cap:
        raise CompoundSpaceError(
            f"compound space too large: {K}^{k} = {K**k} signals exceeds cap {cap}"
        )
    rows = np.ones((1, structure.num_states))
    for _ in range(k):
        rows = (rows[:, None, :] * structure.likelihood[None, :, :]).reshape(
            -1, structure.num_states
        )
    names = tuple(
        "+".join(combo) for combo in itertools.product(structure.signals, repeat=k)
    )
    return InfoStructure(
        states=structure.states,
        signals=names,
        prior=structure.prior,
        likelihood=rows,
    )


def binary_symmetric(
    accuracy: float, prior: Sequence[float] = (0.5, 0.5)
) -> InfoStructure:
    """Two states, two signals, each signal matching its state with ``accuracy``."""
    if not 0.0 < accuracy < 1.0:
        raise ValueError("accuracy must lie strictly between 0 and 1")
    return InfoStructure(
        states=StateSpace(("w1", "w2")),
        signals=("s1", "s2"),
        prior=np.asarray(prior, dtype=float),
        likelihood=np.array(
            [[accuracy, 1.0 - accuracy], [1.0 - accuracy, accuracy]]
        ),
    )


# ---------------------------------------------------------------------------
# structure files
# ---------------------------------------------------------------------------

def _cleanup_distribution(vec: np.ndarray, what: str, normalize: bool) -> np.ndarray:
    total = float(vec.sum())
    if normalize:
        if total <= 0.0:
            raise ValueError(f"{what} must have positive total to normalize")
        return vec / total
    if abs(total - 1.0) > SIMPLEX_ATOL:
        raise ValueError(
            f"{what} sums to {total!r}, off the simplex by more than {SIMPLEX_ATOL}; "
            "set 'normalize: true' to rescale"
        )
    return vec / total


def load_structure(path: str) -> InfoStructure:
    """Read an :class:`InfoStructure` from a YAML document.

    Keys: ``states``, ``signals``, ``prior``, ``likelihood`` (one row per
    signal), optional ``posterior_override`` and ``normalize``.  Distributions
    off their simplex by more than 1e-9 are rejected unless ``normalize`` is
    true; small rounding residue is always rescaled away.
    """
    with open(path, "r", encoding="utf-8") as handle:
        doc = yaml.safe_load(handle)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a mapping at the top level")
    for key in ("states", "signals", "prior", "likelihood"):
        if key not in doc:
            raise ValueError(f"{path}: missing key {key!r}")
    normalize = bool(doc.get("normalize", False))
    states = StateSpace(tuple(str(x) for x in doc["states"]))
    signals = tuple(str(x) for x in doc["signals"])
    prior = _cleanup_distribution(
        np.asarray(doc["prior"], dtype=float), "prior", normalize
    )
    likelihood = np.asarray(doc["likelihood"], dtype=float)
    if likelihood.shape != (len(signals), len(states)):
        raise ValueError(
            f"{path}: likelihood must be {len(signals)}x{len(states)} (row per signal)"
        )
    cols = [
        _cleanup_distribution(likelihood[:, j], f"likelihood column {j}", normalize)
        for j in range(len(states))
    ]
    likelihood = np.stack(cols, axis=1)
    override = None
    if doc.get("posterior_override") is not None:
        override = np.asarray(doc["posterior_override"], dtype=float)
        rows = [
            _cleanup_distribution(override[i], f"posterior_override row {i}", normalize)
            for i in range(override.shape[0])
        ]
        override = np.stack(rows, axis=0)
    return InfoStructure(
        states=states,
        signals=signals,
        prior=prior,
        likelihood=likelihood,
        posterior_override=override,
    )


def save_structure(structure: InfoStructure, path: str) -> None:
    """Write a structure as a YAML document readable by :func:`load_structure`."""
    doc: dict = {
        "states": list(structure.states.labels),
        "signals": list(structure.signals),
        "prior": [float(x) for x in structure.prior],
        "likelihood": [[float(x) for x in row] for row in structure.likelihood],
    }
    if structure.posterior_override is not None:
        doc["posterior_override"] = [
            [float(x) for x in row] for row in structure.posterior_override
        ]
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(doc, handle, sort_keys=False)
