"""Tests for partition models, order-k belief types, hierarchy-based
posterior recovery, and the matched counterexample models."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest
from support import random_small_model

from popmean import (
    IncompatibleProfileError,
    LIPMAN_ANCHOR,
    PartitionModel,
    StateSpace,
    UnidentifiableHierarchyError,
    build_lipman,
    first_disagreement_order,
    full_info_posterior,
    full_info_posterior_exact,
    hierarchies_equal_up_to,
    kth_order_types,
    lipman_constant,
    load_partition_model,
    make_partition_model,
    recover_from_hierarchy,
    save_partition_model,
)

F = Fraction


def common_knowledge_model() -> PartitionModel:
    """Two players, one cell each: everything is common knowledge."""
    return make_partition_model(
        ("w1", "w2"),
        [("g1", "w1", "1/2"), ("g2", "w2", "1/2")],
        [[["g1", "g2"]], [["g1", "g2"]]],
    )


def independent_signal_model() -> PartitionModel:
    """Two players observing independent binary signals about a binary state.

    Signal accuracies 2/3 and 3/5; ground states are (state, signal1, signal2)
    with product prior, partitions group by own signal.
    """
    acc = {0: F(2, 3), 1: F(3, 5)}
    ground = []
    for w in (0, 1):
        for a in (0, 1):
            for b in (0, 1):
                p = (
                    F(1, 2)
                    * (acc[0] if a == w else 1 - acc[0])
                    * (acc[1] if b == w else 1 - acc[1])
                )
                ground.append((f"w{w + 1}a{a}b{b}", f"w{w + 1}", p))
    names = [row[0] for row in ground]
    by_a = [[n for n in names if f"a{a}" in n] for a in (0, 1)]
    by_b = [[n for n in names if f"b{b}" in n] for b in (0, 1)]
    return make_partition_model(("w1", "w2"), ground, [by_a, by_b])


class TestPartitionModel:
    def test_accessors(self):
        model = independent_signal_model()
        assert model.num_players == 2
        assert model.num_ground == 8
        assert model.cells_containing("w1a0b1") == (0, 1)
        assert "w1a0b1" in model.cell_members(0, 0)
        assert "w1a0b1" in model.cell_members(1, 1)
        assert model.payoff_index(model.ground_index("w2a1b0")) == 1

    def test_prior_accepts_rational_and_decimal_strings(self):
        model = make_partition_model(
            ("w1", "w2"),
            [("a", "w1", "1/8"), ("b", "w1", "0.375"), ("c", "w2", "0.5")],
            [[["a", "b", "c"]]],
        )
        assert model.prior == (F(1, 8), F(3, 8), F(1, 2))

    def test_float_prior_rejected(self):
        with pytest.raises(TypeError, match="rational/decimal string"):
            make_partition_model(
                ("w1", "w2"),
                [("a", "w1", 0.5), ("b", "w2", 0.5)],
                [[["a", "b"]]],
            )

    def test_prior_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            make_partition_model(
                ("w1", "w2"),
                [("a", "w1", "1/2"), ("b", "w2", "1/3")],
                [[["a", "b"]]],
            )

    def test_negative_prior_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            make_partition_model(
                ("w1", "w2"),
                [("a", "w1", "3/2"), ("b", "w2", "-1/2")],
                [[["a", "b"]]],
            )

    def test_duplicate_ground_names_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            make_partition_model(
                ("w1", "w2"),
                [("a", "w1", "1/2"), ("a", "w2", "1/2")],
                [[["a"]]],
            )

    def test_unknown_payoff_rejected(self):
        with pytest.raises(ValueError, match="unknown state"):
            make_partition_model(
                ("w1", "w2"),
                [("a", "w3", "1")],
                [[["a"]]],
            )

    def test_partition_must_cover(self):
        with pytest.raises(ValueError, match="cover"):
            PartitionModel(
                payoff_states=StateSpace(("w1", "w2")),
                ground_states=("a", "b"),
                payoffs=("w1", "w2"),
                prior=(F(1, 2), F(1, 2)),
                partitions=(((0,),),),
            )

    def test_overlapping_cells_rejected(self):
        with pytest.raises(ValueError, match="partition"):
            PartitionModel(
                payoff_states=StateSpace(("w1", "w2")),
                ground_states=("a", "b"),
                payoffs=("w1", "w2"),
                prior=(F(1, 2), F(1, 2)),
                partitions=(((0, 1), (1,)),),
            )

    def test_empty_cell_rejected(self):
        with pytest.raises(ValueError, match="empty cell"):
            PartitionModel(
                payoff_states=StateSpace(("w1", "w2")),
                ground_states=("a",),
                payoffs=("w1",),
                prior=(F(1),),
                partitions=(((0,), ()),),
            )

    def test_at_least_one_player(self):
        with pytest.raises(ValueError, match="at least one player"):
            PartitionModel(
                payoff_states=StateSpace(("w1", "w2")),
                ground_states=("a",),
                payoffs=("w1",),
                prior=(F(1),),
                partitions=(),
            )


class TestKthOrderTypes:
    def test_common_knowledge_one_class_per_player(self):
        model = common_knowledge_model()
        for k in (1, 2, 5):
            types = kth_order_types(model, k)
            for player in range(model.num_players):
                assert len(set(types.class_ids[player])) == 1

    def test_tail_cell_is_certain_of_second_state(self):
        base, _ = build_lipman(2)
        types = kth_order_types(base, 1)
        g = base.ground_index("s2.3")
        cid = types.class_ids[0][g]
        assert types.class_ids[0][base.ground_index("s2.4")] == cid
        assert types.records[cid] == ((1, F(1)),)

    def test_all_cells_distinct_at_order_two(self):
        base, _ = build_lipman(2)
        types = kth_order_types(base, 2)
        for player in range(2):
            ids = {types.class_ids[player][g] for g in range(base.num_ground)}
            assert len(ids) == len(base.partitions[player])

    def test_order_one_merges_cells_with_equal_posteriors(self):
        # player 1's two cells share the conditional (1/2, 1/2) at order 1 but
        # face different neighbour classes, so order 2 separates them.
        model = make_partition_model(
            ("w1", "w2"),
            [("a", "w1", "1/4"), ("b", "w2", "1/4"),
             ("c", "w1", "1/4"), ("d", "w2", "1/4")],
            [
                [["a", "b"], ["c", "d"]],
                [["a", "b", "c"], ["d"]],
            ],
        )
        order1 = kth_order_types(model, 1)
        assert order1.class_ids[0][0] == order1.class_ids[0][2]
        order2 = kth_order_types(model, 2)
        assert order2.class_ids[0][0] != order2.class_ids[0][2]

    def test_zero_prior_state_excluded_from_records(self):
        _, modified = build_lipman(2)
        types = kth_order_types(modified, 1)
        g = modified.ground_index("s1.1")
        cid = types.class_ids[0][g]
        assert types.records[cid] == ((0, F(2, 3)), (1, F(1, 3)))

    def test_zero_mass_cell_dropped_with_warning(self):
        model = make_partition_model(
            ("w1", "w2"),
            [("a", "w1", "1/2"), ("b", "w2", "1/2"), ("z", "w2", "0")],
            [
                [["a", "b"], ["z"]],
                [["a", "b", "z"]],
            ],
        )
        with pytest.warns(RuntimeWarning, match="zero-mass cell"):
            types = kth_order_types(model, 1)
        assert types.class_ids[0][2] is None
        assert types.class_ids[0][0] is not None

    def test_refinement_chain(self):
        rng = random.Random(7)
        for _ in range(30):
            model = random_small_model(rng)
            levels = [kth_order_types(model, k) for k in (1, 2, 3, 4)]
            for coarse, fine in zip(levels, levels[1:]):
                for player in range(model.num_players):
                    seen: dict[int, int] = {}
                    for g in range(model.num_ground):
                        fid = fine.class_ids[player][g]
                        cid = coarse.class_ids[player][g]
                        if fid is None:
                            continue
                        assert seen.setdefault(fid, cid) == cid

    def test_class_counts_nondecreasing_and_stabilize(self):
        rng = random.Random(11)
        for _ in range(20):
            model = random_small_model(rng)
            cap = model.num_ground

            def counts(k: int) -> tuple[int, ...]:
                types = kth_order_types(model, k)
                return tuple(
                    len({c for c in types.class_ids[p] if c is not None})
                    for p in range(model.num_players)
                )

            history = [counts(k) for k in range(1, cap + 2)]
            for earlier, later in zip(history, history[1:]):
                assert all(a <= b for a, b in zip(earlier, later))
            assert history[cap - 1] == history[cap]

    def test_order_must_be_positive(self):
        with pytest.raises(ValueError, match="at least 1"):
            kth_order_types(common_knowledge_model(), 0)


class TestHierarchiesEqualUpTo:
    def test_model_equals_itself(self):
        base, _ = build_lipman(2)
        assert hierarchies_equal_up_to(base, LIPMAN_ANCHOR, base, LIPMAN_ANCHOR, 25)

    def test_matched_pair_at_design_order(self):
        base, modified = build_lipman(2)
        assert hierarchies_equal_up_to(base, LIPMAN_ANCHOR, modified, LIPMAN_ANCHOR, 2)

    def test_matched_pair_differs_one_order_higher(self):
        base, modified = build_lipman(2)
        assert not hierarchies_equal_up_to(base, LIPMAN_ANCHOR, modified, LIPMAN_ANCHOR, 3)

    def test_first_disagreement_orders(self):
        for m in (2, 3):
            base, modified = build_lipman(m)
            assert first_disagreement_order(base, LIPMAN_ANCHOR, modified, LIPMAN_ANCHOR) == m + 1

    def test_same_hierarchy_in_structurally_different_models(self):
        # both models make (1/2, 1/2) common knowledge; the comparison
        # terminates by detecting stabilization, not by an order cap.
        small = common_knowledge_model()
        large = make_partition_model(
            ("w1", "w2"),
            [("x", "w1", "1/4"), ("y", "w1", "1/4"), ("z", "w2", "1/2")],
            [[["x", "y", "z"]], [["x", "y", "z"]]],
        )
        assert first_disagreement_order(small, "g1", large, "x") is None
        assert hierarchies_equal_up_to(small, "g1", large, "x", 50)

    def test_profiles_by_indices_and_names_agree(self):
        base, modified = build_lipman(2)
        profile = base.cells_containing(LIPMAN_ANCHOR)
        assert hierarchies_equal_up_to(base, profile, modified, LIPMAN_ANCHOR, 2)
        named = tuple("s1.1" for _ in range(base.num_players))
        assert hierarchies_equal_up_to(base, named, modified, LIPMAN_ANCHOR, 2)

    def test_mismatched_payoff_states_rejected(self):
        base, _ = build_lipman(2)
        other = make_partition_model(
            ("a", "b"),
            [("g1", "a", "1/2"), ("g2", "b", "1/2")],
            [[["g1", "g2"]], [["g1", "g2"]]],
        )
        with pytest.raises(ValueError, match="payoff states"):
            hierarchies_equal_up_to(base, LIPMAN_ANCHOR, other, "g1", 1)

    def test_mismatched_player_counts_rejected(self):
        base, _ = build_lipman(2)
        three = make_partition_model(
            ("w1", "w2"),
            [("g1", "w1", "1/2"), ("g2", "w2", "1/2")],
            [[["g1", "g2"]]] * 3,
        )
        with pytest.raises(ValueError, match="number of players"):
            hierarchies_equal_up_to(base, LIPMAN_ANCHOR, three, "g1", 1)

    def test_order_must_be_positive(self):
        base, modified = build_lipman(2)
        with pytest.raises(ValueError, match="at least 1"):
            hierarchies_equal_up_to(base, LIPMAN_ANCHOR, modified, LIPMAN_ANCHOR, 0)

    def test_zero_mass_profile_rejected(self):
        model = make_partition_model(
            ("w1", "w2"),
            [("a", "w1", "1/2"), ("b", "w2", "1/2"), ("z", "w2", "0")],
            [
                [["a", "b"], ["z"]],
                [["a", "b", "z"]],
            ],
        )
        with pytest.warns(RuntimeWarning):
            with pytest.raises(IncompatibleProfileError, match="zero prior mass"):
                first_disagreement_order(model, "z", model, "z")


class TestFullInfoPosterior:
    def test_matched_pair_posteriors(self):
        base, modified = build_lipman(2)
        assert full_info_posterior_exact(base, LIPMAN_ANCHOR) == (F(1, 2), F(1, 2))
        assert full_info_posterior_exact(modified, LIPMAN_ANCHOR) == (F(0), F(1))

    def test_float_view_matches_exact(self):
        base, _ = build_lipman(3)
        exact = full_info_posterior_exact(base, LIPMAN_ANCHOR)
        vector = full_info_posterior(base, LIPMAN_ANCHOR)
        assert vector.components == tuple(float(p) for p in exact)

    def test_single_ground_state_point_mass(self):
        model = make_partition_model(
            ("w1", "w2"),
            [("only", "w2", "1")],
            [[["only"]], [["only"]]],
        )
        assert full_info_posterior_exact(model, "only") == (F(0), F(1))

    def test_independent_signals_match_bayes(self):
        model = independent_signal_model()
        acc = {0: F(2, 3), 1: F(3, 5)}
        for a, b in itertools.product((0, 1), repeat=2):
            likes = [
                (acc[0] if a == w else 1 - acc[0]) * (acc[1] if b == w else 1 - acc[1])
                for w in (0, 1)
            ]
            expected = tuple(l / sum(likes) for l in likes)
            assert full_info_posterior_exact(model, (a, b)) == expected

    def test_zero_mass_intersection_rejected(self):
        model = make_partition_model(
            ("w1", "w2"),
            [("a", "w1", "1/2"), ("b", "w2", "1/2")],
            [
                [["a"], ["b"]],
                [["a"], ["b"]],
            ],
        )
        with pytest.raises(IncompatibleProfileError, match="incompatible profile"):
            full_info_posterior_exact(model, (0, 1))

    def test_profile_validation(self):
        model = common_knowledge_model()
        with pytest.raises(ValueError, match="one cell per player"):
            full_info_posterior_exact(model, (0,))
        with pytest.raises(ValueError, match="no cell"):
            full_info_posterior_exact(model, (0, 4))
        with pytest.raises(ValueError, match="unknown ground state"):
            full_info_posterior_exact(model, "nope")


class TestRecoverFromHierarchy:
    def test_matched_pair_recovery(self):
        base, modified = build_lipman(2)
        assert recover_from_hierarchy(base, LIPMAN_ANCHOR).exact_posterior == (F(1, 2), F(1, 2))
        assert recover_from_hierarchy(modified, LIPMAN_ANCHOR).exact_posterior == (F(0), F(1))

    def test_independent_signals_recover_bayes(self):
        model = independent_signal_model()
        for a, b in itertools.product((0, 1), repeat=2):
            result = recover_from_hierarchy(model, (a, b))
            assert result.exact_posterior == full_info_posterior_exact(model, (a, b))
            # every (state, signal pair) event is reachable through shared cells
            assert len(result.closure) == 8

    def test_float_posterior_tracks_exact(self):
        base, _ = build_lipman(2)
        result = recover_from_hierarchy(base, LIPMAN_ANCHOR)
        assert result.posterior.components == tuple(
            float(p) for p in result.exact_posterior
        )

    def test_three_player_models_match_oracle(self):
        rng = random.Random(100)
        verified = 0
        for _ in range(100):
            model = random_small_model(rng, players=3)
            profiles = itertools.product(*[range(len(p)) for p in model.partitions])
            for profile in profiles:
                try:
                    expected = full_info_posterior_exact(model, profile)
                except IncompatibleProfileError:
                    continue
                try:
                    result = recover_from_hierarchy(model, profile)
                except UnidentifiableHierarchyError:
                    break
                assert result.exact_posterior == expected
                verified += 1
        assert verified > 100

    def test_duplicate_hierarchies_rejected(self):
        model = make_partition_model(
            ("w1", "w2"),
            [("a", "w1", "1/2"), ("b", "w1", "1/2")],
            [
                [["a"], ["b"]],
                [["a", "b"]],
            ],
        )
        with pytest.raises(UnidentifiableHierarchyError, match="unidentifiable hierarchy"):
            recover_from_hierarchy(model, (0, 0))

    def test_zero_probability_profile_rejected(self):
        model = make_partition_model(
            ("w1", "w2"),
            [("a", "w1", "1/2"), ("b", "w2", "1/2")],
            [
                [["a"], ["b"]],
                [["a"], ["b"]],
            ],
        )
        with pytest.raises(IncompatibleProfileError, match="incompatible profile"):
            recover_from_hierarchy(model, (0, 1))

    def test_closure_entries_are_state_profile_pairs(self):
        base, _ = build_lipman(2)
        result = recover_from_hierarchy(base, LIPMAN_ANCHOR)
        profile = base.cells_containing(LIPMAN_ANCHOR)
        labels = set(base.payoff_states.labels)
        assert all(label in labels for label, _ in result.closure)
        assert any(p == profile for _, p in result.closure)


class TestBuildLipman:
    def test_base_model_m2(self):
        base, modified = build_lipman(2)
        assert base.num_ground == 8
        assert set(base.prior) == {F(1, 8)}
        assert modified.num_ground == 9

    def test_ground_counts(self):
        for m, base_count in ((3, 16), (5, 64)):
            base, modified = build_lipman(m)
            assert base.num_ground == base_count
            assert modified.num_ground == base_count + 1

    def test_payoff_tags_follow_state_family(self):
        for model in build_lipman(3):
            for g, name in enumerate(model.ground_states):
                assert model.payoffs[g] == ("w1" if name.startswith("s1") else "w2")

    def test_base_partitions_are_triples_plus_tail(self):
        base, _ = build_lipman(3)
        for player in range(2):
            sizes = sorted(len(cell) for cell in base.partitions[player])
            assert sizes == [3, 3, 3, 3, 4]

    def test_construction_constant(self):
        assert lipman_constant(3) == F(1, 40)
        for m in (2, 3, 5):
            _, modified = build_lipman(m)
            assert min(p for p in modified.prior if p > 0) == lipman_constant(m)

    def test_total_probability_identity(self):
        for m in (3, 5, 7):
            x = 2 * lipman_constant(m)
            y = 2**m - 2
            assert 3 * x + y * (x / 2) + (y + 1) * (2 * x) == 1

    def test_weight_classes(self):
        # besides the anchor (zero) and the three designated states at x, the
        # primed states carry x/2 and the unprimed states 2x.
        _, modified = build_lipman(5)
        x = 2 * lipman_constant(5)
        special = {"s1.1": F(0), "s2.1": x, "s1.1p": x, "s2.2p": x}
        for g, name in enumerate(modified.ground_states):
            if name in special:
                assert modified.prior[g] == special[name]
            elif name.endswith("p"):
                assert modified.prior[g] == x / 2
            else:
                assert modified.prior[g] == 2 * x

    def test_agreement_and_posteriors(self):
        for m in (2, 3, 5):
            base, modified = build_lipman(m)
            assert hierarchies_equal_up_to(base, LIPMAN_ANCHOR, modified, LIPMAN_ANCHOR, m)
            assert first_disagreement_order(base, LIPMAN_ANCHOR, modified, LIPMAN_ANCHOR) == m + 1
            assert full_info_posterior_exact(base, LIPMAN_ANCHOR) == (F(1, 2), F(1, 2))
            assert full_info_posterior_exact(modified, LIPMAN_ANCHOR) == (F(0), F(1))

    def test_mirrored_flips_posterior(self):
        for m in (2, 3):
            base, mirrored = build_lipman(m, mirrored=True)
            assert full_info_posterior_exact(mirrored, LIPMAN_ANCHOR) == (F(1), F(0))
            assert hierarchies_equal_up_to(base, LIPMAN_ANCHOR, mirrored, LIPMAN_ANCHOR, m)
            assert first_disagreement_order(base, LIPMAN_ANCHOR, mirrored, LIPMAN_ANCHOR) == m + 1

    def test_even_order_runs_one_higher(self):
        base, modified = build_lipman(4)
        assert base.num_ground == 64
        assert lipman_constant(4) == lipman_constant(5)
        assert hierarchies_equal_up_to(base, LIPMAN_ANCHOR, modified, LIPMAN_ANCHOR, 4)
        assert first_disagreement_order(base, LIPMAN_ANCHOR, modified, LIPMAN_ANCHOR) == 6

    def test_order_too_small(self):
        with pytest.raises(ValueError, match="m >= 2"):
            build_lipman(1)

    def test_higher_order_base_models_fold(self):
        # for m >= 3 two sibling triples share every neighbour cell, so their
        # full hierarchies coincide and recovery's injectivity check fires;
        # the full-information posterior itself is still well defined.
        base, _ = build_lipman(3)
        with pytest.raises(UnidentifiableHierarchyError):
            recover_from_hierarchy(base, LIPMAN_ANCHOR)
        assert full_info_posterior_exact(base, LIPMAN_ANCHOR) == (F(1, 2), F(1, 2))


class TestModelFiles:
    def test_round_trip(self, tmp_path):
        _, modified = build_lipman(2)
        path = tmp_path / "modified.yaml"
        save_partition_model(modified, str(path))
        loaded = load_partition_model(str(path))
        assert loaded.ground_states == modified.ground_states
        assert loaded.payoffs == modified.payoffs
        assert loaded.prior == modified.prior
        assert loaded.partitions == modified.partitions
        assert loaded.payoff_states.labels == modified.payoff_states.labels

    def test_decimal_priors_parse_exactly(self, tmp_path):
        path = tmp_path / "model.yaml"
        path.write_text(
            "payoff_states: [w1, w2]\n"
            "ground_states:\n"
            "  - {name: a, payoff: w1, prior: '0.125'}\n"
            "  - {name: b, payoff: w2, prior: '0.875'}\n"
            "partitions:\n"
            "  - [[a, b]]\n"
        )
        model = load_partition_model(str(path))
        assert model.prior == (F(1, 8), F(7, 8))

    def test_malformed_file_names_path(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("payoff_states: [w1]\n")
        with pytest.raises(ValueError, match="broken.yaml"):
            load_partition_model(str(path))
