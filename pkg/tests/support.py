"""Shared fixtures and generators for the test suite."""
from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from popmean.hierarchy import PartitionModel, make_partition_model
from popmean.model import InfoStructure, StateSpace, check_assumptions

# The three-state demonstration tables bundled with the package (also embedded
# in popmean.example1; duplicated here so the tests freeze their own copy).
DEMO_POSTERIOR = np.array(
    [
        [0.40, 0.21, 0.39],
        [0.45, 0.54, 0.01],
        [0.44, 0.06, 0.50],
    ]
)
DEMO_LIKELIHOOD = np.array(
    [
        [0.310, 0.259, 0.433],
        [0.349, 0.667, 0.011],
        [0.341, 0.074, 0.556],
    ]
)
DEMO_STATES = ("w1", "w2", "w3")
DEMO_SIGNALS = ("s1", "s2", "s3")


def demo_structure() -> InfoStructure:
    """Replay-mode structure carrying both demonstration tables."""
    return InfoStructure(
        states=StateSpace(DEMO_STATES),
        signals=DEMO_SIGNALS,
        prior=np.full(3, 1.0 / 3.0),
        likelihood=DEMO_LIKELIHOOD,
        posterior_override=DEMO_POSTERIOR,
    )


def random_structure(
    rng: np.random.Generator,
    num_states: int,
    num_signals: int,
    delta: float = 0.05,
    min_mean_gap: float = 1e-3,
    require_full_rank: bool = True,
    max_tries: int = 500,
) -> InfoStructure:
    """Rejection-sample a structure passing :func:`check_assumptions`.

    Priors and likelihood columns are drawn uniformly from their simplices
    with a small floor keeping every entry strictly positive (so signal
    distributions are mutually absolutely continuous by construction).
    """
    floor = 1e-3
    for _ in range(max_tries):
        prior = rng.dirichlet(np.ones(num_states))
        prior = (prior + floor) / (1.0 + floor * num_states)
        columns = [rng.dirichlet(np.ones(num_signals)) for _ in range(num_states)]
        likelihood = np.stack(columns, axis=1)
        likelihood = (likelihood + floor) / (1.0 + floor * num_signals)
        structure = InfoStructure(
            states=StateSpace(tuple(f"w{i+1}" for i in range(num_states))),
            signals=tuple(f"s{i+1}" for i in range(num_signals)),
            prior=prior,
            likelihood=likelihood,
        )
        report = check_assumptions(structure, delta=delta)
        if report.passes(
            require_full_rank=require_full_rank, min_mean_gap=min_mean_gap
        ):
            return structure
    raise RuntimeError(
        f"no structure with L={num_states}, K={num_signals} passed the checks "
        f"in {max_tries} tries"
    )


def limit_reports(structure):
    """One report per signal: the posterior belief paired with the truthful
    second-order expectation, standing in for the exact large-population limit."""
    from popmean import AgentReport, BeliefVector, expected_belief_matrix, posterior_matrix, truthful_alpha

    Q = posterior_matrix(structure)
    means = expected_belief_matrix(structure)
    return [
        AgentReport(
            first_order=BeliefVector(tuple(Q[k])),
            second_order=truthful_alpha(Q[k], means),
        )
        for k in range(structure.num_signals)
    ]


def random_small_model(rng: random.Random, players: int | None = None) -> PartitionModel:
    num_payoff = rng.choice([2, 3])
    labels = [f"w{j + 1}" for j in range(num_payoff)]
    num_ground = rng.randint(3, 6)
    names = [f"g{j + 1}" for j in range(num_ground)]
    weights = [rng.randint(1, 9) for _ in names]
    total = sum(weights)
    ground = [
        (name, rng.choice(labels), Fraction(weight, total))
        for name, weight in zip(names, weights)
    ]
    partitions = []
    for _ in range(players if players is not None else rng.choice([2, 3])):
        order = names[:]
        rng.shuffle(order)
        num_cuts = rng.randint(0, min(2, num_ground - 1))
        cuts = sorted(rng.sample(range(1, num_ground), num_cuts))
        cells, start = [], 0
        for cut in cuts + [num_ground]:
            cells.append(order[start:cut])
            start = cut
        partitions.append(cells)
    return make_partition_model(labels, ground, partitions)
