"""Network learning, inference, prediction, and cross-validation tests.

Inference is checked against a brute-force joint-enumeration oracle;
learned counts are checked against an independent Counter-based tally.
"""

import random
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from walknotify import vocab
from walknotify.bayes import (
    BayesNet,
    CandidateMap,
    Cpt,
    IncompleteAssignment,
    ReactionRecord,
    TooFewRecords,
    UnknownBarrier,
    UnknownState,
    ZeroEvidence,
    default_candidates,
    default_structure,
    infer_posterior,
    joint_probability,
    k_fold_cv,
    learn_parameters,
    load_model,
    parse_candidates,
    parse_structure,
    predict_reaction,
    random_baseline,
    read_dataset,
    save_model,
    write_dataset,
)
from walknotify.vocab import Variable

from helpers import enumerate_posterior, random_evidence, random_net

# The eight worked examples shipped with the model documentation.
SAMPLE_ROWS = [
    ReactionRecord("Fine", "30C+", "No", "not walk", "bicycles_on_street", "proceed with caution"),
    ReactionRecord("Cloudy", "5C-", "Yes", "walk for exercise", "stairs_in_station", "escalator"),
    ReactionRecord("Rain", "other", "No", "walk for exercise", "bicycles_on_sidewalk", "detour"),
    ReactionRecord("Fine", "other", "Little", "walk for exercise", "stairs_in_station", "neglect"),
    ReactionRecord("Fine", "5C-", "Little", "not walk", "crowd_in_station", "change time slot"),
    ReactionRecord("Cloudy", "other", "Little", "not walk", "road_without_sidewalk", "proceed with caution"),
    ReactionRecord("Cloudy", "5C-", "Yes", "walk for exercise", "street_people", "detour"),
    ReactionRecord("Rain", "5C-", "Little", "not walk", "stairs_in_station", "elevator"),
]


class TestStructure:
    def test_default_structure_is_reaction_rooted(self):
        structure = default_structure()
        assert structure.parents["reaction"] == ()
        for name in ("weather", "temperature", "locality", "willingness", "barrier"):
            assert structure.parents[name] == ("reaction",)

    def test_cycle_rejected(self):
        registry = {
            "a": Variable("a", ("x", "y")),
            "b": Variable("b", ("x", "y")),
        }
        with pytest.raises(ValueError, match="cycle"):
            parse_structure("a <- b\nb <- a", registry)

    def test_unknown_variable_rejected(self):
        with pytest.raises(ValueError, match="unknown variable"):
            parse_structure("mood")

    def test_optional_profile_variables_usable(self):
        text = "reaction\nbarrier <- reaction\npurpose <- reaction\nwalk_ability <- reaction"
        structure = parse_structure(text)
        assert {v.name for v in structure.variables} == {"reaction", "barrier", "purpose", "walk_ability"}


class TestLearning:
    def test_empty_data_gives_uniform_rows(self):
        net = learn_parameters(default_structure(), [], alpha=1.0)
        for cpt in net.cpts.values():
            k = cpt.probs.shape[-1]
            assert np.allclose(cpt.probs, 1.0 / k)

    def test_identical_rows_alpha_zero_point_mass(self):
        rows = [SAMPLE_ROWS[0]] * 5
        net = learn_parameters(default_structure(), rows, alpha=0.0)
        r_idx = vocab.REACTION.index("proceed with caution")
        assert net.cpts["reaction"].probs[r_idx] == 1.0
        w_idx = vocab.WEATHER.index("Fine")
        assert net.cpts["weather"].probs[r_idx, w_idx] == 1.0
        # unobserved parent configurations fall back to uniform rows
        other_r = vocab.REACTION.index("detour")
        assert np.allclose(net.cpts["weather"].probs[other_r], 1.0 / 3.0)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 2.5])
    def test_sample_rows_against_hand_tally(self, alpha):
        structure = default_structure()
        net = learn_parameters(structure, SAMPLE_ROWS, alpha=alpha)

        # Independent tally: count (parent-state, child-state) pairs per
        # variable with a Counter and apply the smoothing formula by hand.
        for name in ("reaction", "weather", "temperature", "locality", "willingness", "barrier"):
            var = vocab.VARIABLES[name]
            parents = structure.parents[name]
            pair_counts = Counter()
            parent_counts = Counter()
            for row in SAMPLE_ROWS:
                assignment = row.to_assignment()
                parent_states = tuple(assignment[p] for p in parents)
                pair_counts[(parent_states, assignment[name])] += 1
                parent_counts[parent_states] += 1
            k = len(var.states)
            parent_state_lists = [vocab.VARIABLES[p].states for p in parents]

            def walk(prefix, lists):
                if not lists:
                    yield prefix
                    return
                for s in lists[0]:
                    yield from walk(prefix + (s,), lists[1:])

            for parent_states in walk((), parent_state_lists):
                total = parent_counts[parent_states]
                denom = total + alpha * k
                parent_idx = tuple(
                    vocab.VARIABLES[p].index(s) for p, s in zip(parents, parent_states)
                )
                for child_state in var.states:
                    count = pair_counts[(parent_states, child_state)]
                    expected = (count + alpha) / denom if denom > 0 else 1.0 / k
                    got = net.cpts[name].probs[parent_idx + (var.index(child_state),)]
                    assert got == pytest.approx(expected, abs=1e-12)

    def test_unknown_state_rejected(self):
        record = dict(SAMPLE_ROWS[0].to_assignment())
        record["weather"] = "Snow"
        with pytest.raises(UnknownState):
            learn_parameters(default_structure(), [record])

    def test_missing_variable_rejected(self):
        record = dict(SAMPLE_ROWS[0].to_assignment())
        del record["weather"]
        with pytest.raises(IncompleteAssignment):
            learn_parameters(default_structure(), [record])

    def test_rows_normalized_and_positive(self):
        net = learn_parameters(default_structure(), SAMPLE_ROWS, alpha=1.0)
        for cpt in net.cpts.values():
            assert np.allclose(cpt.probs.sum(axis=-1), 1.0, atol=1e-9)
            assert np.all(cpt.probs > 0)


class TestJointProbability:
    def test_single_variable(self):
        var = Variable("a", ("a1", "a2"))
        net = BayesNet([var], {"a": Cpt("a", (), np.array([0.3, 0.7]))})
        assert joint_probability(net, {"a": "a1"}) == pytest.approx(0.3)

    def test_two_independent_uniform(self):
        a, b = Variable("a", ("x", "y")), Variable("b", ("x", "y"))
        net = BayesNet(
            [a, b],
            {"a": Cpt("a", (), np.array([0.5, 0.5])), "b": Cpt("b", (), np.array([0.5, 0.5]))},
        )
        for sa in ("x", "y"):
            for sb in ("x", "y"):
                assert joint_probability(net, {"a": sa, "b": sb}) == pytest.approx(0.25)

    def test_random_net_sums_to_one(self):
        import itertools

        rng = random.Random(31)
        net = random_net(rng, max_vars=5)
        states = [net.variables[n].states for n in net.variables]
        total = sum(
            joint_probability(net, dict(zip(net.variables, combo)))
            for combo in itertools.product(*states)
        )
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_incomplete_assignment(self):
        net = learn_parameters(default_structure(), [], alpha=1.0)
        with pytest.raises(IncompleteAssignment):
            joint_probability(net, {"weather": "Fine"})


class TestInference:
    def test_deterministic_edge(self):
        a, b = Variable("a", ("a1", "a2")), Variable("b", ("b1", "b2"))
        net = BayesNet(
            [a, b],
            {
                "a": Cpt("a", (), np.array([0.5, 0.5])),
                "b": Cpt("b", ("a",), np.array([[1.0, 0.0], [0.2, 0.8]])),
            },
        )
        posterior = infer_posterior(net, {"a": "a1"}, "b")
        assert posterior["b1"] == pytest.approx(1.0)

    def test_uniform_net_gives_uniform_posterior(self):
        net = learn_parameters(default_structure(), [], alpha=1.0)
        posterior = infer_posterior(net, {"weather": "Rain", "barrier": "steep_stairs"}, "reaction")
        assert all(p == pytest.approx(1.0 / 7.0) for p in posterior.values())

    def test_matches_enumeration_oracle(self):
        rng = random.Random(2024)
        worst = 0.0
        for _ in range(25):
            net = random_net(rng, max_vars=6)
            for _ in range(8):
                query = rng.choice(list(net.variables))
                evidence = random_evidence(rng, net, query)
                got = infer_posterior(net, evidence, query)
                want = enumerate_posterior(net, evidence, query)
                worst = max(worst, max(abs(got[s] - want[s]) for s in got))
        assert worst < 1e-9

    def test_elimination_order_independent(self):
        rng = random.Random(77)
        for _ in range(10):
            net = random_net(rng, max_vars=7)
            query = rng.choice(list(net.variables))
            evidence = random_evidence(rng, net, query)
            hidden = [n for n in net.variables if n != query and n not in evidence]
            reference = infer_posterior(net, evidence, query)
            for _ in range(3):
                order = hidden[:]
                rng.shuffle(order)
                other = infer_posterior(net, evidence, query, elimination_order=order)
                assert all(abs(reference[s] - other[s]) < 1e-9 for s in reference)

    def test_zero_evidence_reported(self):
        rows = [SAMPLE_ROWS[0]] * 3
        net = learn_parameters(default_structure(), rows, alpha=0.0)
        with pytest.raises(ZeroEvidence):
            infer_posterior(net, {"weather": "Rain"}, "reaction")

    def test_query_in_evidence_rejected(self):
        net = learn_parameters(default_structure(), [], alpha=1.0)
        with pytest.raises(ValueError):
            infer_posterior(net, {"reaction": "detour"}, "reaction")

    def test_unknown_evidence_state_rejected(self):
        net = learn_parameters(default_structure(), [], alpha=1.0)
        with pytest.raises(UnknownState):
            infer_posterior(net, {"weather": "Snowstorm"}, "reaction")


class TestCandidateMap:
    def test_default_covers_every_barrier_class(self):
        candidates = default_candidates()
        for barrier in vocab.BARRIER_CLASSES:
            reactions = candidates[barrier]
            assert 2 <= len(reactions) <= 3
            assert vocab.NEGLECT in reactions

    def test_validation(self):
        with pytest.raises(ValueError, match="at least 2"):
            CandidateMap({"steep_stairs": ["neglect"]})
        with pytest.raises(ValueError, match="include"):
            CandidateMap({"steep_stairs": ["detour", "across"]})
        with pytest.raises(ValueError, match="duplicate"):
            CandidateMap({"steep_stairs": ["neglect", "neglect", "detour"]})
        with pytest.raises(ValueError, match="unknown reaction"):
            CandidateMap({"steep_stairs": ["sprint", "neglect"]})
        with pytest.raises(ValueError, match="unknown barrier"):
            CandidateMap({"quicksand": ["detour", "neglect"]})

    def test_parse_candidates(self):
        cm = parse_candidates("# comment\nsteep_stairs: detour, neglect\n")
        assert cm["steep_stairs"] == ("detour", "neglect")
        with pytest.raises(UnknownBarrier):
            cm["hawkers"]


class TestPredictReaction:
    def test_full_mass_on_single_candidate(self):
        rows = [
            ReactionRecord("Rain", "other", "No", "walk for exercise", "bicycles_on_sidewalk", "detour")
        ] * 4
        net = learn_parameters(default_structure(), rows, alpha=0.0)
        ranking = predict_reaction(net, rows[0].features(), default_candidates())
        assert ranking == [("detour", 1.0), ("neglect", 0.0)]

    def test_uniform_posterior_breaks_ties_lexicographically(self):
        net = learn_parameters(default_structure(), [], alpha=1.0)
        features = {"weather": "Fine", "temperature": "other", "locality": "Yes",
                    "willingness": "other", "barrier": "stairs_in_station"}
        ranking = predict_reaction(net, features, default_candidates())
        assert [name for name, _ in ranking] == ["elevator", "escalator", "neglect"]
        assert all(p == pytest.approx(1.0 / 3.0) for _, p in ranking)

    def test_learns_caution_for_street_bicycles_pattern(self):
        # Corpus encoding: people unwilling to walk proceed with caution
        # around street bicycles, everyone else neglects them.
        rng = random.Random(9)
        rows = []
        for _ in range(200):
            willingness = rng.choice(vocab.WILLINGNESS.states)
            reaction = "proceed with caution" if willingness == "not walk" else "neglect"
            rows.append(
                ReactionRecord(
                    rng.choice(vocab.WEATHER.states),
                    rng.choice(vocab.TEMPERATURE.states),
                    rng.choice(vocab.LOCALITY.states),
                    willingness,
                    "bicycles_on_street",
                    reaction,
                )
            )
        net = learn_parameters(default_structure(), rows, alpha=1.0)
        features = {"weather": "Fine", "temperature": "30C+", "locality": "No",
                    "willingness": "not walk", "barrier": "bicycles_on_street"}
        top, prob = predict_reaction(net, features, default_candidates())[0]
        assert top == "proceed with caution"
        assert prob > 0.5

    def test_unknown_barrier(self):
        net = learn_parameters(default_structure(), [], alpha=1.0)
        partial = parse_candidates("steep_stairs: detour, neglect")
        features = {"weather": "Fine", "temperature": "other", "locality": "Yes",
                    "willingness": "other", "barrier": "hawkers"}
        with pytest.raises(UnknownBarrier):
            predict_reaction(net, features, partial)

    def test_masking_preserves_ranking_under_scaling(self):
        # Renormalization after masking must not change the argmax.
        rng = random.Random(55)
        net = learn_parameters(default_structure(), SAMPLE_ROWS, alpha=1.0)
        candidates = default_candidates()
        for _ in range(50):
            features = {
                "weather": rng.choice(vocab.WEATHER.states),
                "temperature": rng.choice(vocab.TEMPERATURE.states),
                "locality": rng.choice(vocab.LOCALITY.states),
                "willingness": rng.choice(vocab.WILLINGNESS.states),
                "barrier": rng.choice(vocab.BARRIER_CLASSES),
            }
            posterior = infer_posterior(net, features, "reaction")
            ranking = predict_reaction(net, features, candidates)
            allowed = candidates[features["barrier"]]
            best_unmasked = max(sorted(allowed), key=lambda r: posterior[r])
            assert ranking[0][0] == best_unmasked
            assert sum(p for _, p in ranking) == pytest.approx(1.0, abs=1e-9)


class TestModelFile:
    def test_round_trip(self, tmp_path):
        net = learn_parameters(default_structure(), SAMPLE_ROWS, alpha=1.0)
        path = tmp_path / "model.json"
        save_model(net, path)
        loaded = load_model(path)
        assert list(loaded.variables) == list(net.variables)
        for name in net.cpts:
            assert np.array_equal(loaded.cpts[name].probs, net.cpts[name].probs)


class TestDatasetFile:
    def test_round_trip_and_header(self, tmp_path):
        path = tmp_path / "data.csv"
        write_dataset(SAMPLE_ROWS, path)
        text = path.read_text()
        assert text.splitlines()[0] == "weather,temperature,locality,willingness,barrier,reaction"
        assert read_dataset(path) == SAMPLE_ROWS

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("weather,temp\nFine,30C+\n")
        with pytest.raises(ValueError, match="header"):
            read_dataset(path)

    def test_bad_state_rejected(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text(
            "weather,temperature,locality,willingness,barrier,reaction\n"
            "Hail,other,Yes,not walk,steep_stairs,detour\n"
        )
        with pytest.raises(UnknownState):
            read_dataset(path)


def uniform_label_records(rng, n, candidates):
    rows = []
    for _ in range(n):
        barrier = rng.choice(vocab.BARRIER_CLASSES)
        rows.append(
            ReactionRecord(
                rng.choice(vocab.WEATHER.states),
                rng.choice(vocab.TEMPERATURE.states),
                rng.choice(vocab.LOCALITY.states),
                rng.choice(vocab.WILLINGNESS.states),
                barrier,
                rng.choice(candidates[barrier]),
            )
        )
    return rows


class TestCrossValidation:
    def test_deterministic_mapping_reaches_full_accuracy(self):
        # Reaction is a pure function of the barrier class: perfectly
        # learnable, so every fold must score 100%.
        rng = random.Random(3)
        candidates = default_candidates()
        rows = []
        for _ in range(450):
            barrier = rng.choice(vocab.BARRIER_CLASSES)
            label = next(r for r in candidates[barrier] if r != vocab.NEGLECT)
            rows.append(
                ReactionRecord(
                    rng.choice(vocab.WEATHER.states),
                    rng.choice(vocab.TEMPERATURE.states),
                    rng.choice(vocab.LOCALITY.states),
                    rng.choice(vocab.WILLINGNESS.states),
                    barrier,
                    label,
                )
            )
        report = k_fold_cv(rows, k=3, seed=1)
        assert all(f.accuracy == 1.0 for f in report.folds)
        assert report.average_accuracy == 1.0
        assert report.baseline < 1.0

    def test_fold_sizes_remainder_to_last(self):
        rng = random.Random(4)
        rows = uniform_label_records(rng, 10, default_candidates())
        report = k_fold_cv(rows, k=3, seed=0)
        sizes = [f.correct + f.incorrect for f in report.folds]
        assert sizes == [3, 3, 4]

    def test_deterministic_given_seed(self):
        rng = random.Random(8)
        rows = uniform_label_records(rng, 120, default_candidates())
        a = k_fold_cv(rows, k=3, seed=42)
        b = k_fold_cv(rows, k=3, seed=42)
        assert a == b
        c = k_fold_cv(rows, k=3, seed=43)
        assert a.folds != c.folds  # different shuffle, different split

    def test_too_few_records_and_bad_k(self):
        rng = random.Random(5)
        rows = uniform_label_records(rng, 5, default_candidates())
        with pytest.raises(TooFewRecords):
            k_fold_cv(rows, k=1)
        with pytest.raises(TooFewRecords):
            k_fold_cv(rows, k=6)

    def test_baseline_formula_exact(self):
        rng = random.Random(6)
        candidates = default_candidates()
        rows = uniform_label_records(rng, 500, candidates)
        n2 = sum(1 for r in rows if len(candidates[r.barrier]) == 2)
        n3 = len(rows) - n2
        expected = float(
            Fraction(1, 2) * Fraction(n2, len(rows)) + Fraction(1, 3) * Fraction(n3, len(rows))
        )
        assert random_baseline(rows, candidates) == expected

    def test_uniform_labels_match_baseline(self):
        # Monte Carlo: with labels drawn uniformly from the candidate
        # sets, mean CV accuracy must sit within 4 points of the baseline.
        candidates = default_candidates()
        accuracies = []
        baseline = None
        for seed in range(20):
            rng = random.Random(1000 + seed)
            rows = uniform_label_records(rng, 1200, candidates)
            report = k_fold_cv(rows, k=3, seed=seed)
            accuracies.append(report.average_accuracy)
            baseline = report.baseline
        mean_accuracy = sum(accuracies) / len(accuracies)
        assert abs(mean_accuracy - baseline) < 0.04
