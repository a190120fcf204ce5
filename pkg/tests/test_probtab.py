import json
from fractions import Fraction
from itertools import product
from random import Random

import pytest

from frontdoor.cgraph import CausalGraph
from frontdoor.errors import (
    ConditioningOnZero,
    LatentIntervention,
    NotNormalized,
    ParseError,
    PositivityViolation,
    ShapeMismatch,
    TooManyVariables,
    UnknownNode,
)
from frontdoor.probtab import (
    Cbn,
    JointTable,
    backdoor_estimate,
    conditional,
    frontdoor_estimate,
    intervene_oracle,
    observational_joint,
    parse_model,
    random_cbn,
)

from helpers import chain_graph, interventional_by_hand, random_dag

F = Fraction


class TestParseModel:
    def test_model_a_file(self, data_dir, model_a):
        m = parse_model((data_dir / "model_a.json").read_text(), rational=True)
        assert m.graph == model_a.graph
        assert m.cardinalities == {"U": 2, "X": 2, "Z": 2, "Y": 2}
        assert m.cpts == model_a.cpts
        # rational parsing reads 0.3 as exactly 3/10
        assert m.cpts["Z"][0][1] == F(3, 10)

    def test_single_binary_node(self):
        doc = json.dumps({
            "graph": {"nodes": [{"name": "A"}], "edges": []},
            "cardinalities": {"A": 2},
            "cpts": {"A": {"parents": [], "table": [[0.5, 0.5]]}},
        })
        m = parse_model(doc)
        assert m.cpts["A"] == [[0.5, 0.5]]

    def test_unnormalized_column_rejected(self):
        doc = json.dumps({
            "graph": {"nodes": [{"name": "A"}], "edges": []},
            "cardinalities": {"A": 2},
            "cpts": {"A": {"parents": [], "table": [[0.5, 0.6]]}},
        })
        with pytest.raises(NotNormalized) as err:
            parse_model(doc)
        assert "'A'" in str(err.value) and "column 0" in str(err.value)

    def test_shape_mismatches(self, g_fd):
        cards = {n: 2 for n in "UXZY"}
        good = {
            "U": [[0.5, 0.5]],
            "X": [[0.8, 0.2], [0.2, 0.8]],
            "Z": [[0.7, 0.3], [0.1, 0.9]],
            "Y": [[0.9, 0.1], [0.4, 0.6], [0.5, 0.5], [0.1, 0.9]],
        }
        with pytest.raises(ShapeMismatch):
            Cbn(g_fd, cards, {**good, "Y": good["Y"][:2]})        # wrong row count
        with pytest.raises(ShapeMismatch):
            Cbn(g_fd, cards, {**good, "X": [[1.0], [1.0]]})       # wrong row width
        with pytest.raises(ShapeMismatch):
            Cbn(g_fd, cards, {k: v for k, v in good.items() if k != "U"})
        with pytest.raises(ShapeMismatch):
            Cbn(g_fd, {**cards, "X": 1}, good)                    # cardinality < 2
        with pytest.raises(NotNormalized):
            Cbn(g_fd, cards, {**good, "U": [[1.5, -0.5]]})        # outside [0, 1]

    def test_declared_parents_must_match_graph(self, data_dir):
        obj = json.loads((data_dir / "model_a.json").read_text())
        obj["cpts"]["Y"]["parents"] = ["Z", "U"]
        with pytest.raises(ShapeMismatch):
            parse_model(json.dumps(obj))

    def test_unknown_keys(self):
        with pytest.raises(ParseError):
            parse_model('{"graph": {"nodes": [], "edges": []}, "cardinalities": {}, "cpts": {}, "x": 1}')


class TestJointTable:
    def test_observational_joint_model_a(self, model_a):
        t = observational_joint(model_a)
        assert [n for n, _ in t.variables] == ["X", "Y", "Z"]
        assert len(t.probs) == 8
        assert t.total_mass() == 1

    def test_latent_free_single_node(self):
        g = CausalGraph(["A"])
        m = Cbn(g, {"A": 2}, {"A": [[F(3, 10), F(7, 10)]]})
        t = observational_joint(m)
        assert t.probs == [F(3, 10), F(7, 10)]

    def test_independent_nodes_product(self):
        g = CausalGraph(["A", "B"])
        m = Cbn(g, {"A": 2, "B": 2},
                {"A": [[F(1, 4), F(3, 4)]], "B": [[F(2, 5), F(3, 5)]]})
        t = observational_joint(m)
        for a, b in product(range(2), range(2)):
            assert t.mass({"A": a, "B": b}) == t.mass({"A": a}) * t.mass({"B": b})

    def test_latent_free_joint_equals_full_product(self):
        rng = Random(31)
        for trial in range(30):
            g = random_dag(rng, min_nodes=3, max_nodes=5)
            m = random_cbn(g, {n: 2 for n in g.node_names}, seed=trial)
            t = observational_joint(m)
            for assign, p in t.assignments():
                direct = 1
                for node in g.node_names:
                    direct *= m.local_prob(node, assign)
                assert p == direct

    def test_variable_cap(self):
        with pytest.raises(TooManyVariables):
            JointTable([(f"V{i}", 2) for i in range(17)], [0] * 2 ** 17)

    def test_marginal(self, model_a):
        t = observational_joint(model_a)
        mx = t.marginal(["X"])
        assert mx.probs == [F(1, 2), F(1, 2)]


class TestConditional:
    def test_uniform(self):
        t = JointTable([("A", 2), ("B", 2)], [F(1, 4)] * 4)
        assert conditional(t, {"A": 0}, {"B": 0}) == F(1, 2)

    def test_model_a_mediator_given_treatment(self, model_a):
        # Z's only parent is X, so the joint must reproduce the CPT entry.
        t = observational_joint(model_a)
        assert conditional(t, {"Z": 1}, {"X": 1}) == F(9, 10)

    def test_zero_mass_event(self):
        t = JointTable([("A", 2), ("B", 2)], [F(1, 2), 0, F(1, 2), 0])
        with pytest.raises(ConditioningOnZero) as err:
            conditional(t, {"A": 0}, {"B": 1})
        assert "B=1" in str(err.value)


class TestInterveneOracle:
    def test_model_a_value_against_hand_computation(self, model_a):
        # Independent check: direct truncated-factorization summation
        # written as raw loops in the test helper.
        by_hand = interventional_by_hand(model_a, {"X": 1}, {"Y": 1})
        assert by_hand == F(141, 200)  # = 0.705
        oracle = intervene_oracle(model_a, {"X": 1}, ["Y"])
        assert oracle.mass({"Y": 1}) == by_hand

    def test_chain_do_equals_conditional(self):
        g = chain_graph()
        m = random_cbn(g, {n: 2 for n in g.node_names}, seed=5)
        t = observational_joint(m)
        for x_val in range(2):
            oracle = intervene_oracle(m, {"X": x_val}, ["Y"])
            for y_val in range(2):
                assert oracle.mass({"Y": y_val}) == conditional(t, {"Y": y_val}, {"X": x_val})

    def test_do_on_childless_node(self, model_a):
        oracle = intervene_oracle(model_a, {"Y": 1}, ["X", "Z"])
        t = observational_joint(model_a)
        for x_val, z_val in product(range(2), range(2)):
            assert oracle.mass({"X": x_val, "Z": z_val}) == t.mass({"X": x_val, "Z": z_val})

    def test_empty_do_is_observational(self, model_a):
        oracle = intervene_oracle(model_a, {}, ["X", "Y", "Z"])
        t = observational_joint(model_a)
        assert oracle.variables == t.variables
        assert oracle.probs == t.probs

    def test_latent_intervention_rejected(self, model_a):
        with pytest.raises(LatentIntervention):
            intervene_oracle(model_a, {"U": 1}, ["Y"])


class TestFrontdoorEstimate:
    def test_model_a_matches_oracle(self, model_a):
        t = observational_joint(model_a)
        estimate = frontdoor_estimate(t, "X", "Z", "Y", 1, 1)
        assert estimate == F(141, 200)
        assert estimate == intervene_oracle(model_a, {"X": 1}, ["Y"]).mass({"Y": 1})

    def test_fully_independent_table_collapses_to_marginal(self):
        # Z independent of X, Y independent of both: the estimate reduces
        # to the plain marginal of Y.
        g = CausalGraph(["X", "Z", "Y"])
        m = Cbn(g, {"X": 2, "Z": 2, "Y": 2}, {
            "X": [[F(1, 3), F(2, 3)]],
            "Z": [[F(1, 4), F(3, 4)]],
            "Y": [[F(2, 5), F(3, 5)]],
        })
        t = observational_joint(m)
        assert frontdoor_estimate(t, "X", "Z", "Y", 0, 1) == F(3, 5)

    def test_structural_zero_raises(self):
        g = CausalGraph(["X", "Z", "Y"], [("X", "Z"), ("Z", "Y")])
        m = Cbn(g, {"X": 2, "Z": 2, "Y": 2}, {
            "X": [[F(1, 2), F(1, 2)]],
            "Z": [[F(1, 1), F(0, 1)], [F(1, 2), F(1, 2)]],   # P(Z=1|X=0) = 0
            "Y": [[F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)]],
        })
        t = observational_joint(m)
        with pytest.raises(PositivityViolation) as err:
            frontdoor_estimate(t, "X", "Z", "Y", 1, 1)
        assert "X=0" in str(err.value) and "Z=1" in str(err.value)

    def test_normalizes_over_outcome(self, g_fd):
        for seed in range(30):
            m = random_cbn(g_fd, {n: 2 for n in g_fd.node_names}, seed=seed)
            t = observational_joint(m)
            for x_val in range(2):
                total = sum(frontdoor_estimate(t, "X", "Z", "Y", x_val, y_val)
                            for y_val in range(2))
                assert total == 1

    def test_state_relabeling_equivariance(self, model_a):
        t = observational_joint(model_a)
        flipped = JointTable(
            t.variables,
            [t.mass({"X": 1 - x, "Y": y, "Z": z})
             for x, y, z in product(range(2), range(2), range(2))],
        )
        for x_val, y_val in product(range(2), range(2)):
            assert frontdoor_estimate(t, "X", "Z", "Y", x_val, y_val) == \
                frontdoor_estimate(flipped, "X", "Z", "Y", 1 - x_val, y_val)


class TestBackdoorEstimate:
    def test_model_a_mediator_effect(self, model_a):
        t = observational_joint(model_a)
        for z_val, y_val in product(range(2), range(2)):
            estimate = backdoor_estimate(t, "Z", "Y", ["X"], z_val, y_val)
            truth = intervene_oracle(model_a, {"Z": z_val}, ["Y"]).mass({"Y": y_val})
            assert estimate == truth

    def test_empty_adjustment_is_conditional(self, model_a):
        t = observational_joint(model_a)
        assert backdoor_estimate(t, "X", "Y", [], 1, 1) == conditional(t, {"Y": 1}, {"X": 1})

    def test_fork_no_causal_path(self):
        # X <- W -> Y with no X->Y edge: adjusting W must give the marginal.
        g = CausalGraph(["X", "Y", "W"], [("W", "X"), ("W", "Y")])
        for seed in range(10):
            m = random_cbn(g, {"X": 2, "Y": 2, "W": 2}, seed=seed)
            t = observational_joint(m)
            estimate = backdoor_estimate(t, "X", "Y", ["W"], 0, 1)
            assert estimate == t.mass({"Y": 1})
            assert estimate == intervene_oracle(m, {"X": 0}, ["Y"]).mass({"Y": 1})


class TestRandomCbn:
    def test_deterministic_per_seed(self, g_fd):
        cards = {n: 2 for n in g_fd.node_names}
        a = random_cbn(g_fd, cards, seed=42)
        b = random_cbn(g_fd, cards, seed=42)
        assert a.cpts == b.cpts
        assert a.cpts != random_cbn(g_fd, cards, seed=43).cpts

    def test_entry_floor_over_many_seeds(self, g_fd):
        cards = {n: 2 for n in g_fd.node_names}
        floor = F(1, 100)
        for seed in range(1000):
            m = random_cbn(g_fd, cards, seed=seed)
            for rows in m.cpts.values():
                for row in rows:
                    assert all(v >= floor for v in row)
                    assert sum(row) == 1

    def test_positivity_of_induced_joint(self, g_fd):
        cards = {n: 2 for n in g_fd.node_names}
        for seed in range(200):
            t = observational_joint(random_cbn(g_fd, cards, seed=seed))
            for x_val, z_val in product(range(2), range(2)):
                assert t.mass({"X": x_val, "Z": z_val}) > 0

    def test_float_mode(self, g_fd):
        m = random_cbn(g_fd, {n: 2 for n in g_fd.node_names}, seed=1, rational=False)
        for rows in m.cpts.values():
            for row in rows:
                assert all(isinstance(v, float) for v in row)
                assert abs(sum(row) - 1) < 1e-9
