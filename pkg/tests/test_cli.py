import json
from fractions import Fraction

import pytest

from frontdoor import cgraph
from frontdoor.cli import main
from frontdoor.docalculus import replay_steps


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def path_of(data_dir, name):
    return str(data_dir / name)


class TestDsep:
    def test_holds(self, capsys, data_dir):
        code, out, _ = run(capsys, "dsep", path_of(data_dir, "g_fd.json"),
                           "--a", "Z", "--b", "Y", "--given", "X",
                           "--underline", "Z")
        assert code == 0
        assert out.strip() == "true"

    def test_fails_with_witness(self, capsys, data_dir):
        code, out, _ = run(capsys, "dsep", path_of(data_dir, "g_fd.json"),
                           "--a", "X", "--b", "Y", "--given", "Z")
        assert code == 1
        assert out.splitlines() == ["false", "witness: X <- U -> Y"]

    def test_overlap_is_usage_error(self, capsys, data_dir):
        code, _, err = run(capsys, "dsep", path_of(data_dir, "g_fd.json"),
                           "--a", "X", "--b", "X")
        assert code == 2
        assert "OverlappingSets" in err

    def test_json_output(self, capsys, data_dir):
        code, out, _ = run(capsys, "dsep", path_of(data_dir, "g_fd.json"),
                           "--a", "X", "--b", "Y", "--given", "Z",
                           "--output", "json")
        obj = json.loads(out)
        assert obj == {"separated": False, "witness": "X <- U -> Y"}


class TestPaths:
    def test_lists_paths(self, capsys, data_dir):
        code, out, _ = run(capsys, "paths", path_of(data_dir, "g_fd.json"),
                           "--a", "X", "--b", "Y")
        assert code == 0
        assert out.splitlines() == ["X <- U -> Y", "X -> Z -> Y"]


class TestCriteriaCommands:
    def test_frontdoor_satisfied(self, capsys, data_dir):
        code, out, _ = run(capsys, "frontdoor", path_of(data_dir, "g_fd.json"),
                           "--x", "X", "--y", "Y", "--z", "Z")
        assert code == 0
        assert "satisfied: true" in out

    def test_frontdoor_empty_mediators(self, capsys, data_dir):
        code, out, _ = run(capsys, "frontdoor", path_of(data_dir, "g_fd.json"),
                           "--x", "X", "--y", "Y", "--z", "")
        assert code == 1
        assert "witness: X -> Z -> Y" in out

    def test_frontdoor_latent_mediator(self, capsys, data_dir):
        code, _, err = run(capsys, "frontdoor", path_of(data_dir, "g_fd.json"),
                           "--x", "X", "--y", "Y", "--z", "U")
        assert code == 2
        assert "latent" in err

    def test_backdoor(self, capsys, data_dir):
        code, out, _ = run(capsys, "backdoor", path_of(data_dir, "g_fd.json"),
                           "--x", "Z", "--y", "Y", "--z", "X")
        assert code == 0
        code, out, _ = run(capsys, "backdoor", path_of(data_dir, "g_fd.json"),
                           "--x", "X", "--y", "Y", "--z", "Z")
        assert code == 1
        assert "descendant violation: Z" in out

    def test_rule_command(self, capsys, data_dir):
        code, out, _ = run(capsys, "rule", path_of(data_dir, "g_fd.json"),
                           "--rule", "2", "--y", "Z", "--x", "", "--z", "X")
        assert code == 0
        assert "applicable: true" in out
        code, out, _ = run(capsys, "rule", path_of(data_dir, "g_fd.json"),
                           "--rule", "2", "--y", "Y", "--x", "", "--z", "X")
        assert code == 1


class TestIdentify:
    def test_replay_pretty(self, capsys, data_dir):
        code, out, _ = run(capsys, "identify", path_of(data_dir, "g_fd.json"),
                           "--x", "X", "--y", "Y", "--z", "Z")
        assert code == 0
        assert "paper Step 1" in out and "paper Step 2" in out and "paper Step 3" in out
        assert out.strip().endswith(
            "result: sum[z] ( P(z|x) * sum[x1] ( P(y|x1,z) * P(x1) ) )"
        )

    def test_replay_json_revalidates(self, capsys, data_dir):
        code, out, _ = run(capsys, "identify", path_of(data_dir, "g_fd.json"),
                           "--x", "X", "--y", "Y", "--z", "Z",
                           "--output", "json")
        assert code == 0
        obj = json.loads(out)
        g = cgraph.parse_graph((data_dir / "g_fd.json").read_text())
        from frontdoor.docalculus import render
        assert render(replay_steps(g, obj)) == obj["result"]

    def test_search_mode(self, capsys, data_dir):
        code, out, _ = run(capsys, "identify", path_of(data_dir, "g_fd.json"),
                           "--x", "X", "--y", "Y", "--search", "--depth", "8")
        assert code == 0
        assert "sum[z] ( P(z|x) * sum[x1] ( P(y|x1,z) * P(x1) ) )" in out

    def test_search_bow_fails(self, capsys, data_dir):
        code, _, err = run(capsys, "identify", path_of(data_dir, "bow.json"),
                           "--x", "X", "--y", "Y", "--search", "--depth", "6")
        assert code == 1
        assert "no derivation found at depth 6" in err

    def test_replay_criterion_failure(self, capsys, data_dir):
        code, _, err = run(capsys, "identify", path_of(data_dir, "bow.json"),
                           "--x", "X", "--y", "Y", "--z", "")
        assert code == 1
        assert "CriterionNotSatisfied" in err


class TestEstimateAndOracle:
    def test_oracle_value(self, capsys, data_dir):
        code, out, _ = run(capsys, "oracle", path_of(data_dir, "model_a.json"),
                           "--do", "X=1", "--outcome", "Y")
        assert code == 0
        assert "P(Y=1|do(X=1)) = 0.705000000000" in out

    def test_estimate_matches_oracle(self, capsys, data_dir):
        code, out, _ = run(capsys, "estimate", path_of(data_dir, "model_a.json"),
                           "--frontdoor", "--x", "X=1", "--z", "Z", "--y", "Y=1")
        assert code == 0
        assert out.strip() == "0.705000000000"

    def test_estimate_rational(self, capsys, data_dir):
        code, out, _ = run(capsys, "estimate", path_of(data_dir, "model_a.json"),
                           "--frontdoor", "--x", "X=1", "--z", "Z", "--y", "Y=1",
                           "--rational")
        assert code == 0
        assert out.strip() == "141/200"

    def test_estimate_backdoor(self, capsys, data_dir):
        code, out, _ = run(capsys, "estimate", path_of(data_dir, "model_a.json"),
                           "--backdoor", "--x", "Z=1", "--y", "Y=1",
                           "--adjust", "X", "--rational")
        assert code == 0
        assert out.strip() == "3/4"

    def test_positivity_violation_exit(self, capsys, tmp_path):
        model = {
            "graph": {"nodes": [{"name": "X"}, {"name": "Z"}, {"name": "Y"}],
                      "edges": [["X", "Z"], ["Z", "Y"]]},
            "cardinalities": {"X": 2, "Z": 2, "Y": 2},
            "cpts": {
                "X": {"parents": [], "table": [[0.5, 0.5]]},
                "Z": {"parents": ["X"], "table": [[1.0, 0.0], [0.5, 0.5]]},
                "Y": {"parents": ["Z"], "table": [[0.5, 0.5], [0.5, 0.5]]},
            },
        }
        path = tmp_path / "zero.json"
        path.write_text(json.dumps(model))
        code, _, err = run(capsys, "estimate", str(path),
                           "--frontdoor", "--x", "X=1", "--z", "Z", "--y", "Y=1")
        assert code == 1
        assert "PositivityViolation" in err
        assert "X=0" in err and "Z=1" in err

    def test_estimate_from_table_file(self, capsys, tmp_path):
        table = {
            "variables": [["X", 2], ["Y", 2]],
            "probabilities": [0.1, 0.4, 0.2, 0.3],
        }
        path = tmp_path / "table.json"
        path.write_text(json.dumps(table))
        code, out, _ = run(capsys, "estimate", str(path),
                           "--backdoor", "--x", "X=1", "--y", "Y=1",
                           "--adjust", "")
        assert code == 0
        assert out.strip() == "0.600000000000"


class TestVerify:
    def test_model_a_exact(self, capsys, data_dir):
        code, out, _ = run(capsys, "verify", path_of(data_dir, "model_a.json"),
                           "--x", "X", "--y", "Y", "--z", "Z", "--rational")
        assert code == 0
        assert "max deviation: 0 (rational mode)" in out

    def test_trials(self, capsys, data_dir):
        code, out, _ = run(capsys, "verify", path_of(data_dir, "model_a.json"),
                           "--x", "X", "--y", "Y", "--z", "Z",
                           "--trials", "20", "--seed", "7", "--rational")
        assert code == 0
        assert "trials: 20/20 agree" in out

    def test_float_mode_within_tolerance(self, capsys, data_dir):
        code, out, _ = run(capsys, "verify", path_of(data_dir, "model_a.json"),
                           "--x", "X", "--y", "Y", "--z", "Z", "--trials", "5")
        assert code == 0

    def test_chain_model(self, capsys, data_dir):
        code, out, _ = run(capsys, "verify", path_of(data_dir, "chain_model.json"),
                           "--x", "X", "--y", "Y", "--z", "Z",
                           "--trials", "5", "--rational")
        assert code == 0
        assert "5/5 agree" in out

    def test_criterion_failure_reported(self, capsys, data_dir, tmp_path):
        # bow graph has no admissible mediator: make Z a child of Y
        model = {
            "graph": {"nodes": [{"name": "X"}, {"name": "Y"}, {"name": "Z"}],
                      "edges": [["X", "Y"], ["Y", "Z"]]},
            "cardinalities": {"X": 2, "Y": 2, "Z": 2},
            "cpts": {
                "X": {"parents": [], "table": [[0.5, 0.5]]},
                "Y": {"parents": ["X"], "table": [[0.7, 0.3], [0.4, 0.6]]},
                "Z": {"parents": ["Y"], "table": [[0.8, 0.2], [0.3, 0.7]]},
            },
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(model))
        code, _, err = run(capsys, "verify", str(path),
                           "--x", "X", "--y", "Y", "--z", "Z")
        assert code == 1
        assert "criterion fails" in err


class TestGlobal:
    def test_version(self, capsys):
        code = main(["--version"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("frontdoor 0.")

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "dsep", "missing.json", "--a", "X", "--b", "Y")
        assert code == 2

    def test_unknown_command(self, capsys):
        assert main(["nonsense"]) == 2
