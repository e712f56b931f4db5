"""Finite belief hierarchies on partition models, in exact rational arithmetic.

A :class:`PartitionModel` is a common-prior information model: ground states
tagged with payoff states, plus one partition per player.  From it this module
computes order-k belief types (``kth_order_types``), compares hierarchies
across models (``hierarchies_equal_up_to``), recovers the pooled-information
posterior from reported hierarchies alone (``recover_from_hierarchy``), and
generates matched model pairs whose hierarchies agree to any chosen order yet
imply different posteriors (``build_lipman``).

All probabilities are :class:`fractions.Fraction`, so belief equality is exact.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import yaml

from .errors import IncompatibleProfileError, UnidentifiableHierarchyError
from .model import BeliefVector, StateSpace

__all__ = [
    "PartitionModel",
    "OrderKTypes",
    "RecoveryResult",
    "make_partition_model",
    "load_partition_model",
    "save_partition_model",
    "kth_order_types",
    "first_disagreement_order",
    "hierarchies_equal_up_to",
    "full_info_posterior",
    "full_info_posterior_exact",
    "recover_from_hierarchy",
    "build_lipman",
    "lipman_constant",
    "LIPMAN_ANCHOR",
]

#: Ground state whose cells form the designated profile in generated models.
LIPMAN_ANCHOR = "s1.1"


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(
        f"prior entries must be Fraction, int, or a rational/decimal string, got {value!r}"
    )


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PartitionModel:
    """Common-prior partition model over tagged ground states.

    ``payoffs[g]`` is the payoff-state label of ground state ``g``; ``prior``
    is exact; ``partitions[i]`` lists player ``i``'s cells as tuples of ground
    state indices, jointly covering every ground state exactly once.
    """

    payoff_states: StateSpace
    ground_states: tuple[str, ...]
    payoffs: tuple[str, ...]
    prior: tuple[Fraction, ...]
    partitions: tuple[tuple[tuple[int, ...], ...], ...]

    def __post_init__(self) -> None:
        ground = tuple(str(g) for g in self.ground_states)
        if len(set(ground)) != len(ground) or not ground:
            raise ValueError("ground state names must be nonempty and unique")
        payoffs = tuple(str(p) for p in self.payoffs)
        if len(payoffs) != len(ground):
            raise ValueError("each ground state needs exactly one payoff tag")
        for p in payoffs:
            self.payoff_states.index(p)
        prior = tuple(_as_fraction(p) for p in self.prior)
        if len(prior) != len(ground):
            raise ValueError("prior must have one entry per ground state")
        if any(p < 0 for p in prior):
            raise ValueError("prior entries must be nonnegative")
        if sum(prior) != 1:
            raise ValueError(f"prior must sum to 1 exactly, got {sum(prior)}")
        partitions = tuple(
            tuple(tuple(int(g) for g in cell) for cell in player)
            for player in self.partitions
        )
        if not partitions:
            raise ValueError("at least one player is required")
        for i, player in enumerate(partitions):
            seen: set[int] = set()
            for cell in player:
                if not cell:
                    raise ValueError(f"player {i} has an empty cell")
                for g in cell:
                    if g < 0 or g >= len(ground) or g in seen:
                        raise ValueError(
                            f"player {i}'s cells must partition the ground states"
                        )
                    seen.add(g)
            if len(seen) != len(ground):
                raise ValueError(f"player {i}'s cells must cover every ground state")
        object.__setattr__(self, "ground_states", ground)
        object.__setattr__(self, "payoffs", payoffs)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "partitions", partitions)
        lookup = tuple(
            {g: c for c, cell in enumerate(player) for g in cell}
            for player in partitions
        )
        object.__setattr__(self, "_cell_lookup", lookup)

    @property
    def num_players(self) -> int:
        return len(self.partitions)

    @property
    def num_ground(self) -> int:
        return len(self.ground_states)

    def ground_index(self, name: str) -> int:
        try:
            return self.ground_states.index(name)
        except ValueError:
            raise ValueError(f"unknown ground state {name!r}") from None

    def payoff_index(self, g: int) -> int:
        return self.payoff_states.index(self.payoffs[g])

    def cell_of(self, player: int, g: int) -> int:
        return self._cell_lookup[player][g]

    def cells_containing(self, name: str) -> tuple[int, ...]:
        """The cell profile induced by one ground state: per player, the index
        of the cell containing it."""
        g = self.ground_index(name)
        return tuple(self.cell_of(i, g) for i in range(self.num_players))

    def cell_members(self, player: int, cell: int) -> tuple[str, ...]:
        return tuple(self.ground_states[g] for g in self.partitions[player][cell])


def make_partition_model(
    payoff_states: Sequence[str],
    ground: Sequence[tuple[str, str, Fraction | int | str]],
    partitions: Sequence[Sequence[Sequence[str]]],
) -> PartitionModel:
    """Build a model from (name, payoff, prior) rows and name-based cells."""
    names = [row[0] for row in ground]
    index = {name: g for g, name in enumerate(names)}
    return PartitionModel(
        payoff_states=StateSpace(tuple(payoff_states)),
        ground_states=tuple(names),
        payoffs=tuple(row[1] for row in ground),
        prior=tuple(_as_fraction(row[2]) for row in ground),
        partitions=tuple(
            tuple(tuple(index[name] for name in cell) for cell in player)
            for player in partitions
        ),
    )


@dataclass(frozen=True)
class OrderKTypes:
    """Order-k belief classes: per player, each ground state's class id (None
    when its cell has zero mass), plus the interned belief records.

    A class id is shared exactly when the fully expanded order-k belief
    records coincide; ``records`` maps ids to records, whose nested components
    are lower-order ids resolvable in the same mapping.
    """

    order: int
    class_ids: tuple[tuple[int | None, ...], ...]
    records: Mapping[int, tuple]

    def classes(self, player: int) -> dict[int, tuple[int, ...]]:
        """Ground states grouped by class id (zero-mass cells excluded)."""
        groups: dict[int, list[int]] = {}
        for g, cid in enumerate(self.class_ids[player]):
            if cid is not None:
                groups.setdefault(cid, []).append(g)
        return {cid: tuple(members) for cid, members in groups.items()}


@dataclass(frozen=True)
class RecoveryResult:
    """Outcome of hierarchy-based recovery: the belief-closure atoms explored
    and the posterior over payoff states."""

    closure: frozenset
    posterior: BeliefVector
    exact_posterior: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if not self.closure:
            raise ValueError("closure must be nonempty")
        if sum(self.exact_posterior) != 1:
            raise ValueError("exact posterior must sum to 1")


# ---------------------------------------------------------------------------
# order-k belief computation
# ---------------------------------------------------------------------------

class _Interner:
    """Hash-consing table: structurally equal records share one id, so id
    equality is exactly expanded-record equality, across every model using
    this table."""

    def __init__(self) -> None:
        self._ids: dict[tuple, int] = {}

    def intern(self, record: tuple) -> int:
        return self._ids.setdefault(record, len(self._ids))

    def records(self) -> dict[int, tuple]:
        return {i: r for r, i in self._ids.items()}


class _LevelComputer:
    """Iterates one model's belief records order by order.

    The order-1 record of a cell is its conditional distribution over payoff
    states; the order-(k+1) record is its conditional distribution over
    (payoff state, other players' order-k ids).  Zero-prior ground states
    contribute nothing; zero-mass cells are dropped with a warning.
    """

    def __init__(self, model: PartitionModel, interner: _Interner) -> None:
        self.model = model
        self.interner = interner
        self.masses: list[list[Fraction]] = []
        for i, player in enumerate(model.partitions):
            masses = [sum(model.prior[g] for g in cell) for cell in player]
            for c, mass in enumerate(masses):
                if mass == 0:
                    warnings.warn(
                        f"dropping zero-mass cell {model.cell_members(i, c)} "
                        f"of player {i}",
                        RuntimeWarning,
                        stacklevel=4,
                    )
            self.masses.append(masses)
        self.levels: list[dict[tuple[int, int], int]] = []

    def order(self, k: int) -> dict[tuple[int, int], int]:
        while len(self.levels) < k:
            self._advance()
        return self.levels[k - 1]

    def _advance(self) -> None:
        model = self.model
        order = len(self.levels) + 1
        previous = self.levels[-1] if self.levels else None
        ids: dict[tuple[int, int], int] = {}
        for i, player in enumerate(model.partitions):
            for c, cell in enumerate(player):
                mass = self.masses[i][c]
                if mass == 0:
                    continue
                dist: dict = {}
                for g in cell:
                    p = model.prior[g]
                    if p == 0:
                        continue
                    if order == 1:
                        key = model.payoff_index(g)
                    else:
                        others = tuple(
                            previous[(j, model.cell_of(j, g))]
                            for j in range(model.num_players)
                            if j != i
                        )
                        key = (model.payoff_index(g), others)
                    dist[key] = dist.get(key, Fraction(0)) + p / mass
                record = tuple(sorted(dist.items()))
                ids[(i, c)] = self.interner.intern(record)
        self.levels.append(ids)


def _joint_grouping(*id_maps: dict[tuple[int, int], int]) -> frozenset:
    """Partition of all cells (tagged by map position) by shared class id.

    Class ids change value from one order to the next even once the classes
    themselves stop refining, so stabilization is detected by comparing these
    groupings, never raw ids.
    """
    groups: dict[int, set] = {}
    for tag, ids in enumerate(id_maps):
        for key, cid in ids.items():
            groups.setdefault(cid, set()).add((tag, *key))
    return frozenset(frozenset(g) for g in groups.values())


def kth_order_types(model: PartitionModel, k: int) -> OrderKTypes:
    """Group each player's ground states by equality of order-k beliefs."""
    if k < 1:
        raise ValueError("order must be at least 1")
    interner = _Interner()
    computer = _LevelComputer(model, interner)
    ids = computer.order(k)
    class_ids = tuple(
        tuple(
            ids.get((i, model.cell_of(i, g)))
            for g in range(model.num_ground)
        )
        for i in range(model.num_players)
    )
    return OrderKTypes(order=k, class_ids=class_ids, records=interner.records())


def _resolve_profile(
    model: PartitionModel,
    profile: str | Sequence[int | str],
) -> tuple[int, ...]:
    """A profile is a ground-state name (each player's cell containing it) or
    one cell index / member name per player."""
    if isinstance(profile, str):
        return model.cells_containing(profile)
    entries = list(profile)
    if len(entries) != model.num_players:
        raise ValueError(
            f"profile needs one cell per player ({model.num_players}), got {len(entries)}"
        )
    resolved = []
    for i, entry in enumerate(entries):
        if isinstance(entry, str):
            resolved.append(model.cell_of(i, model.ground_index(entry)))
        else:
            c = int(entry)
            if c < 0 or c >= len(model.partitions[i]):
                raise ValueError(f"player {i} has no cell {c}")
            resolved.append(c)
    return tuple(resolved)


def first_disagreement_order(
    model_a: PartitionModel,
    profile_a: str | Sequence[int | str],
    model_b: PartitionModel,
    profile_b: str | Sequence[int | str],
    max_order: int | None = None,
) -> int | None:
    """Smallest order at which the two profiles' belief records differ.

    Returns None when no disagreement is found — either both hierarchies
    stabilized while still equal (so they agree at every order) or
    ``max_order`` was reached.
    """
    if model_a.payoff_states.labels != model_b.payoff_states.labels:
        raise ValueError("models must share the same payoff states")
    if model_a.num_players != model_b.num_players:
        raise ValueError("models must have the same number of players")
    cells_a = _resolve_profile(model_a, profile_a)
    cells_b = _resolve_profile(model_b, profile_b)
    interner = _Interner()
    computer_a = _LevelComputer(model_a, interner)
    computer_b = _LevelComputer(model_b, interner)
    order = 0
    previous_grouping = None
    while True:
        order += 1
        ids_a = computer_a.order(order)
        ids_b = computer_b.order(order)
        for i in range(model_a.num_players):
            key_a, key_b = (i, cells_a[i]), (i, cells_b[i])
            if key_a not in ids_a or key_b not in ids_b:
                raise IncompatibleProfileError(
                    "incompatible profile: a reported cell has zero prior mass"
                )
            if ids_a[key_a] != ids_b[key_b]:
                return order
        grouping = _joint_grouping(ids_a, ids_b)
        if grouping == previous_grouping:
            return None
        previous_grouping = grouping
        if max_order is not None and order >= max_order:
            return None


def hierarchies_equal_up_to(
    model_a: PartitionModel,
    profile_a: str | Sequence[int | str],
    model_b: PartitionModel,
    profile_b: str | Sequence[int | str],
    m: int,
) -> bool:
    """True iff every player's belief records coincide at the two profiles for
    every order up to ``m``."""
    if m < 1:
        raise ValueError("order must be at least 1")
    disagreement = first_disagreement_order(
        model_a, profile_a, model_b, profile_b, max_order=m
    )
    return disagreement is None or disagreement > m


# ---------------------------------------------------------------------------
# posteriors
# ---------------------------------------------------------------------------

def full_info_posterior_exact(
    model: PartitionModel,
    profile: str | Sequence[int | str],
) -> tuple[Fraction, ...]:
    """Prior conditioned on the intersection of the profile's cells,
    marginalized to payoff states, as exact rationals."""
    cells = _resolve_profile(model, profile)
    members = set(model.partitions[0][cells[0]])
    for i in range(1, model.num_players):
        members &= set(model.partitions[i][cells[i]])
    mass = sum((model.prior[g] for g in members), Fraction(0))
    if mass == 0:
        raise IncompatibleProfileError(
            "incompatible profile: the reported cells intersect in a "
            "zero-probability event"
        )
    totals = [Fraction(0)] * len(model.payoff_states)
    for g in members:
        totals[model.payoff_index(g)] += model.prior[g]
    return tuple(t / mass for t in totals)


def full_info_posterior(
    model: PartitionModel,
    profile: str | Sequence[int | str],
) -> BeliefVector:
    """Float view of :func:`full_info_posterior_exact`."""
    return BeliefVector(tuple(float(p) for p in full_info_posterior_exact(model, profile)))


def recover_from_hierarchy(
    model: PartitionModel,
    profile: str | Sequence[int | str],
) -> RecoveryResult:
    """Recover the pooled-information posterior from reported hierarchies.

    Mirrors the analyst's procedure: check that full hierarchies identify
    cells uniquely, build the belief closure of the reported profile (atoms
    reachable through any player's conditional support), propagate probability
    ratios along shared cells, and normalize over the atoms carrying the
    reported profile.  The result provably equals ``full_info_posterior``.
    """
    cells = _resolve_profile(model, profile)

    # Injectivity: iterate belief records until the class partition reaches
    # its fixed point; two cells of one player sharing a class there would
    # report identical full hierarchies.
    interner = _Interner()
    computer = _LevelComputer(model, interner)
    order = 0
    previous_grouping = None
    while True:
        order += 1
        ids = computer.order(order)
        grouping = _joint_grouping(ids)
        if grouping == previous_grouping:
            break
        previous_grouping = grouping
    stable = ids
    for i in range(model.num_players):
        active = [c for c in range(len(model.partitions[i])) if (i, c) in stable]
        ids = [stable[(i, c)] for c in active]
        if len(set(ids)) != len(ids):
            raise UnidentifiableHierarchyError(
                f"unidentifiable hierarchy: two cells of player {i} induce "
                "identical full belief hierarchies"
            )

    # Atoms: positive-prior ground states pooled by (payoff, cell profile).
    atoms: dict[tuple[int, tuple[int, ...]], Fraction] = {}
    for g in range(model.num_ground):
        p = model.prior[g]
        if p == 0:
            continue
        signature = (
            model.payoff_index(g),
            tuple(model.cell_of(i, g) for i in range(model.num_players)),
        )
        atoms[signature] = atoms.get(signature, Fraction(0)) + p

    reported = [a for a in atoms if a[1] == cells]
    if not reported:
        raise IncompatibleProfileError(
            "incompatible profile: the reported hierarchy profile has zero probability"
        )

    siblings: dict[tuple[int, int], list[tuple[int, tuple[int, ...]]]] = {}
    for atom in atoms:
        for i, c in enumerate(atom[1]):
            siblings.setdefault((i, c), []).append(atom)

    # Ratio propagation: within one player's cell, relative atom probabilities
    # are that player's conditional beliefs, known from their hierarchy.
    values: dict[tuple[int, tuple[int, ...]], Fraction] = {reported[0]: Fraction(1)}
    queue = [reported[0]]
    while queue:
        atom = queue.pop()
        for i, c in enumerate(atom[1]):
            for other in siblings[(i, c)]:
                ratio = atoms[other] / atoms[atom]
                implied = values[atom] * ratio
                if other in values:
                    if values[other] != implied:
                        raise ValueError(
                            "inconsistent probability ratios along the closure"
                        )
                else:
                    values[other] = implied
                    queue.append(other)

    totals = [Fraction(0)] * len(model.payoff_states)
    for atom in reported:
        totals[atom[0]] += values[atom]
    mass = sum(totals)
    exact = tuple(t / mass for t in totals)
    closure = frozenset(
        (model.payoff_states.labels[atom[0]], atom[1]) for atom in values
    )
    return RecoveryResult(
        closure=closure,
        posterior=BeliefVector(tuple(float(p) for p in exact)),
        exact_posterior=exact,
    )


# ---------------------------------------------------------------------------
# matched model pairs with order-m agreement
# ---------------------------------------------------------------------------

def lipman_constant(m: int) -> Fraction:
    """Smallest positive prior weight in the modified model (half the
    parameter solving the total-probability equation).  For even m > 2 the
    construction runs at m + 1."""
    effective = m if m == 2 or m % 2 == 1 else m + 1
    return Fraction(1, 5 * 2**effective)


def _sigma1_triple(k: int, primed: bool) -> list[str]:
    tag = "p" if primed else ""
    return [f"s1.{2 * k - 1}{tag}", f"s1.{2 * k}{tag}", f"s2.{k}{tag}"]


def _sigma2_triple(k: int, primed: bool) -> list[str]:
    tag = "p" if primed else ""
    return [f"s2.{2 * k - 1}{tag}", f"s2.{2 * k}{tag}", f"s1.{k}{tag}"]


def _band(n: int) -> range:
    return range(2 ** (n - 1) + 1, 2**n + 1)


def _base_model(m: int) -> PartitionModel:
    """Uniform-prior model: player 1 pairs consecutive sigma-1 states with a
    sigma-2 state, player 2 symmetrically, plus one tail cell each."""
    half, full = 2 ** (m - 1), 2**m
    ground = [
        (f"s{l}.{k}", f"w{l}", Fraction(1, 2 ** (m + 1)))
        for l in (1, 2)
        for k in range(1, full + 1)
    ]
    pi1 = [_sigma1_triple(k, False) for k in range(1, half + 1)]
    pi1.append([f"s2.{k}" for k in range(half + 1, full + 1)])
    pi2 = [_sigma2_triple(k, False) for k in range(1, half + 1)]
    pi2.append([f"s1.{k}" for k in range(half + 1, full + 1)])
    return make_partition_model(("w1", "w2"), ground, (pi1, pi2))


def _modified_partitions(m: int) -> tuple[list[list[str]], list[list[str]]]:
    half, full = 2 ** (m - 1), 2**m
    pi1: list[list[str]] = [
        ["s1.1", "s2.1", "s1.2"],
        ["s1.1p", "s2.2p", "s1.3p", "s1.4p"],
    ]
    for n in range(3, m - 1, 2):
        pi1 += [_sigma1_triple(k, True) for k in _band(n)]
    for n in range(2, m, 2):
        pi1 += [_sigma1_triple(k, False) for k in _band(n)]
    pi1.append([f"s2.{k}p" for k in range(half + 1, full + 1)])

    pi2: list[list[str]] = [["s1.1", "s2.1", "s1.1p", "s2.2p"]]
    for n in range(2, m, 2):
        pi2 += [_sigma2_triple(k, True) for k in _band(n)]
    for n in range(1, m - 1, 2):
        pi2 += [_sigma2_triple(k, False) for k in _band(n)]
    pi2.append([f"s1.{k}" for k in range(half + 1, full + 1)])
    return pi1, pi2


def _modified_model(m: int) -> PartitionModel:
    """The order-m twin: primed duplicates to the left of the anchor at half
    weight, right-side states at double weight, anchor at zero."""
    pi1, pi2 = _modified_partitions(m)
    roster: list[str] = []
    seen: set[str] = set()
    for cell in pi1 + pi2:
        for name in cell:
            if name not in seen:
                seen.add(name)
                roster.append(name)
    union1 = {name for cell in pi1 for name in cell}
    union2 = {name for cell in pi2 for name in cell}
    if union1 != union2:
        raise AssertionError("modified partitions must cover the same states")

    x = 2 * lipman_constant(m)
    special = {"s1.1": Fraction(0), "s2.1": x, "s1.1p": x, "s2.2p": x}
    ground = []
    for name in roster:
        if name in special:
            prior = special[name]
        elif name.endswith("p"):
            prior = x / 2
        else:
            prior = 2 * x
        ground.append((name, "w1" if name.startswith("s1") else "w2", prior))
    return make_partition_model(("w1", "w2"), ground, (pi1, pi2))


_M2_MODIFIED_PRIOR = {
    "s1.4p": "1/20",
    "s1.3p": "1/20",
    "s2.2p": "1/10",
    "s1.1p": "1/10",
    "s1.1": "0",
    "s2.1": "1/10",
    "s1.2": "1/5",
    "s2.3": "1/5",
    "s2.4": "1/5",
}

_M2_MODIFIED_PI1 = [
    ["s1.4p", "s1.3p", "s2.2p", "s1.1p"],
    ["s1.1", "s2.1", "s1.2"],
    ["s2.3", "s2.4"],
]

_M2_MODIFIED_PI2 = [
    ["s1.4p", "s1.3p"],
    ["s2.2p", "s1.1p", "s1.1", "s2.1"],
    ["s1.2", "s2.3", "s2.4"],
]


def _mirror(model: PartitionModel) -> PartitionModel:
    """Flip left and right: swap the sigma roles in every state name and swap
    the two players.  The anchor's posterior flips from (0,1) to (1,0)."""

    def flip(name: str) -> str:
        if name.startswith("s1"):
            return "s2" + name[2:]
        return "s1" + name[2:]

    renamed = [flip(name) for name in model.ground_states]
    ground = [
        (renamed[g], "w1" if renamed[g].startswith("s1") else "w2", model.prior[g])
        for g in range(model.num_ground)
    ]
    partitions = [
        [[renamed[g] for g in cell] for cell in model.partitions[i]]
        for i in (1, 0)
    ]
    return make_partition_model(("w1", "w2"), ground, partitions)


def build_lipman(m: int, mirrored: bool = False) -> tuple[PartitionModel, PartitionModel]:
    """A pair of models whose hierarchies at the anchor profile (the cells
    containing ``s1.1``) agree up to order ``m`` but whose pooled-information
    posteriors are (1/2, 1/2) versus (0, 1) — or (1, 0) with ``mirrored``.

    m = 2 uses the explicit nine-state twin; odd m >= 3 uses the general
    recipe; even m >= 4 runs the construction at m + 1, which agrees up to
    m + 1 and therefore up to m.
    """
    if m < 2:
        raise ValueError("the construction needs m >= 2")
    effective = m if m == 2 or m % 2 == 1 else m + 1
    base = _base_model(effective)
    if effective == 2:
        ground = [
            (name, "w1" if name.startswith("s1") else "w2", prior)
            for name, prior in _M2_MODIFIED_PRIOR.items()
        ]
        modified = make_partition_model(
            ("w1", "w2"), ground, (_M2_MODIFIED_PI1, _M2_MODIFIED_PI2)
        )
    else:
        modified = _modified_model(effective)
    if mirrored:
        modified = _mirror(modified)
    return base, modified


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

def save_partition_model(model: PartitionModel, path: str) -> None:
    """Write a model as a text document with rational priors."""
    payload = {
        "payoff_states": list(model.payoff_states.labels),
        "ground_states": [
            {
                "name": model.ground_states[g],
                "payoff": model.payoffs[g],
                "prior": str(model.prior[g]),
            }
            for g in range(model.num_ground)
        ],
        "partitions": [
            [list(model.cell_members(i, c)) for c in range(len(model.partitions[i]))]
            for i in range(model.num_players)
        ],
    }
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(payload, handle, sort_keys=False)


def load_partition_model(path: str) -> PartitionModel:
    """Read a model written by :func:`save_partition_model`.

    Priors may be rational strings ("1/8") or decimal strings ("0.125"); both
    parse to exact rationals.
    """
    with open(path, "r", encoding="utf-8") as handle:
        payload = yaml.safe_load(handle)
    try:
        ground = [
            (row["name"], row["payoff"], _as_fraction(row["prior"]))
            for row in payload["ground_states"]
        ]
        return make_partition_model(
            payload["payoff_states"], ground, payload["partitions"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed partition model ({exc})") from exc
