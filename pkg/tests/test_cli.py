import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fixtures import TABLE_RANK2, coalition, table_rhs
from infoattrib import __version__
from infoattrib.cli import main
from infoattrib.games import Game
from infoattrib.information import JointDistribution, random_distribution, xor_distribution
from infoattrib.lattice import get_lattice
from infoattrib.selectors import priority_sharing_system

DATA = Path(__file__).resolve().parent.parent / "data"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


@pytest.fixture
def rank2_game(tmp_path):
    return write(tmp_path, "g.json", {"rank": 2, "worth": {
        "<0>": 0, "<a>": 1, "<b>": 0, "<a,b>": 2, "<ab>": 3}})


class TestLatticeStats:
    @pytest.mark.parametrize("rank,coalitions,exts", [(1, 3, 1), (2, 6, 2), (3, 20, 48)])
    def test_counts(self, rank, coalitions, exts, capsys):
        code, out, _ = run(["lattice-stats", "--rank", rank], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["result"] == {"rank": rank, "players": 2**rank, "coalitions": coalitions,
                                     "linear_extensions": exts}
        assert payload["tool"] == {"name": "infoattrib", "version": __version__}

    def test_rank5_skips_extensions(self, capsys):
        code, out, _ = run(["lattice-stats", "--rank", 5], capsys)
        result = json.loads(out)["result"]
        assert code == 0 and result["coalitions"] == 7581
        assert result["linear_extensions"] == "skipped (cap)"

    def test_cap_exit_code(self, capsys):
        code, _, err = run(["lattice-stats", "--rank", 6], capsys)
        assert code == 2 and "cap" in err

    def test_table_format(self, capsys):
        code, out, _ = run(["lattice-stats", "--rank", 3, "--format", "table"], capsys)
        assert code == 0 and "coalitions" in out and "48" in out

    def test_env_override(self, capsys, monkeypatch):
        monkeypatch.setenv("INFOATTRIB_RANK", "2")
        code, out, _ = run(["lattice-stats"], capsys)
        assert code == 0 and json.loads(out)["result"]["coalitions"] == 6
        code, out, _ = run(["lattice-stats", "--rank", 3], capsys)
        assert json.loads(out)["result"]["coalitions"] == 20

    def test_bad_env(self, capsys, monkeypatch):
        monkeypatch.setenv("INFOATTRIB_RANK", "three")
        code, _, _ = run(["lattice-stats"], capsys)
        assert code == 3


class TestGame:
    def test_dividends_csv_matches_table2(self, rank2_game, capsys):
        code, out, _ = run(["game", "dividends", "-i", rank2_game, "--format", "csv"], capsys)
        assert code == 0
        v = Game.from_json(json.loads(rank2_game.read_text()))
        rhs = table_rhs(v, TABLE_RANK2, 2)
        lat = get_lattice(2)
        lines = out.splitlines()[1:]
        for row, value in rhs.items():
            key = lat.key(lat.index(coalition(2, row)))
            line = next(x for x in lines if x.split(",")[0].strip('"') == key or x.startswith(f'"{key}"'))
            assert float(line.rsplit(",", 1)[1]) == pytest.approx(value, abs=1e-12)

    def test_dividends_json(self, rank2_game, capsys):
        code, out, _ = run(["game", "dividends", "-i", rank2_game], capsys)
        rows = {r["coalition"]: r["dividend"] for r in json.loads(out)["result"]["rows"]}
        assert code == 0 and rows["<ab>"] == 1.0 and rows["<a,b>"] == 1.0

    def test_value_hierarchical(self, rank2_game, capsys):
        code, out, _ = run(["game", "value", "-i", rank2_game, "--value", "hierarchical",
                            "--method", "exact"], capsys)
        alloc = json.loads(out)["result"]["allocation"]
        assert code == 0
        assert [alloc[k] for k in ("0", "a", "b", "ab")] == pytest.approx([0, 1.5, 0.5, 1])

    def test_value_shipped_example(self, capsys):
        code, out, _ = run(["game", "value", "-i", DATA / "game_rank2.json", "--format", "csv"], capsys)
        assert code == 0 and out.splitlines()[2] == "a,1.5"

    @pytest.mark.parametrize("value", ["priority", "proportional", "random-order"])
    def test_other_values_efficient(self, value, rank2_game, capsys):
        code, out, _ = run(["game", "value", "-i", rank2_game, "--value", value], capsys)
        assert code == 0
        assert abs(json.loads(out)["result"]["efficiency_residual"]) < 1e-12

    def test_sharing_file(self, rank2_game, tmp_path, capsys):
        q = write(tmp_path, "q.json", priority_sharing_system(2).to_json())
        code, out, _ = run(["game", "value", "-i", rank2_game, "--value", "sharing-file",
                            "--sharing", q], capsys)
        assert code == 0 and json.loads(out)["result"]["allocation"]["a"] == 1.5

    def test_sharing_file_missing(self, rank2_game, capsys):
        code, _, err = run(["game", "value", "-i", rank2_game, "--value", "sharing-file",
                            "--sharing", "/nonexistent.json"], capsys)
        assert code == 3 and "cannot read" in err

    def test_sampled_requires_seed(self, rank2_game, capsys):
        code, _, err = run(["game", "value", "-i", rank2_game, "--method", "sampled",
                            "--samples", 100], capsys)
        assert code == 3 and "--seed" in err

    def test_sampled(self, rank2_game, capsys):
        argv = ["game", "value", "-i", rank2_game, "--method", "sampled", "--samples", 500, "--seed", 4]
        code, out, _ = run(argv, capsys)
        result = json.loads(out)["result"]
        assert code == 0 and "stderr" in result
        assert run(argv, capsys)[1] == out

    def test_incomplete_worth(self, tmp_path, capsys):
        path = write(tmp_path, "bad.json", {"rank": 2, "worth": {"<a>": 1}})
        code, _, err = run(["game", "dividends", "-i", path], capsys)
        assert code == 3 and "'<0>'" in err

    def test_bad_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{")
        assert run(["game", "dividends", "-i", path], capsys)[0] == 3

    def test_rank4_exact_needs_override(self, tmp_path, capsys, rng):
        lat = get_lattice(4)
        worth = np.concatenate([[0.0], rng.normal(size=len(lat) - 1)])
        path = write(tmp_path, "g4.json", Game(lat, worth).to_json())
        assert run(["game", "value", "-i", path], capsys)[0] == 2
        code, out, _ = run(["game", "value", "-i", path, "--allow-large"], capsys)
        assert code == 0 and abs(json.loads(out)["result"]["efficiency_residual"]) < 1e-9

    def test_check_priority_reports_witness(self, tmp_path, capsys):
        path = write(tmp_path, "g3.json", Game.zero(get_lattice(3)).to_json())
        code, out, _ = run(["game", "check", "-i", path, "--value", "priority", "--trials", 20], capsys)
        assert code == 0
        results = {r["axiom"]: r for r in json.loads(out)["result"]["axioms"]["results"]}
        pos = results["positivity"]
        assert not pos["passed"] and pos["witness"]["monotone"] and pos["witness"]["payoff"] < 0

    def test_check_table(self, rank2_game, capsys):
        code, out, _ = run(["game", "check", "-i", rank2_game, "--format", "table", "--trials", 5], capsys)
        assert code == 0 and "monotone" in out and "efficiency" in out


class TestDecompose:
    def test_xor(self, tmp_path, capsys):
        path = write(tmp_path, "xor.json", xor_distribution().to_json())
        code, out, _ = run(["decompose", "-i", path], capsys)
        result = json.loads(out)["result"]
        assert code == 0
        c = result["contributions_bits"]
        assert c["{1,2}"] == pytest.approx(1.0, abs=1e-6)
        assert all(abs(c[k]) < 1e-6 for k in ("{}", "{1}", "{2}"))
        assert result["tolerances"]["ipf_residual"] == 1e-10

    def test_product_distribution(self, tmp_path, capsys, rng):
        m = np.einsum("i,j,y->ijy", rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2)),
                      rng.dirichlet(np.ones(3)))
        path = write(tmp_path, "prod.json", JointDistribution.from_array(m).to_json())
        code, out, _ = run(["decompose", "-i", path], capsys)
        result = json.loads(out)["result"]
        assert code == 0 and abs(result["mutual_information_bits"]) < 1e-12
        assert max(abs(x) for x in result["contributions_bits"].values()) < 1e-9

    def test_byte_identical(self, tmp_path, capsys, rng):
        path = write(tmp_path, "d.json", random_distribution(rng, (2, 2, 2, 2)).to_json())
        outs = []
        for _ in range(2):
            out = tmp_path / f"out{len(outs)}.json"
            assert run(["decompose", "-i", path, "-o", out, "--method", "sampled",
                        "--samples", 300, "--seed", 9], capsys)[0] == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_convergence_failure(self, tmp_path, capsys, rng):
        path = write(tmp_path, "d.json", random_distribution(rng, (3, 3, 3, 2)).to_json())
        code, _, err = run(["decompose", "-i", path, "--tol", 1e-15, "--max-iters", 2], capsys)
        assert code == 4 and "coalition <" in err and "residuals" in err

    def test_not_normalized(self, tmp_path, capsys):
        data = xor_distribution().to_json()
        data["mass"] = {k: 2 * v for k, v in data["mass"].items()}
        assert run(["decompose", "-i", write(tmp_path, "d.json", data)], capsys)[0] == 3

    def test_csv_and_table(self, capsys):
        code, out, _ = run(["decompose", "-i", DATA / "xor.json", "--format", "csv"], capsys)
        assert code == 0 and out.splitlines()[0] == "predictor,contribution_bits"
        code, out, _ = run(["decompose", "-i", DATA / "and_noisy_copy.json", "--format", "table"], capsys)
        assert code == 0 and out.startswith("I(X;Y) =")

    def test_pruned_states_reported(self, tmp_path, capsys):
        data = {"inputs": [{"name": "A", "states": ["0", "1", "2"]}],
                "target": {"name": "Y", "states": ["0", "1"]},
                "mass": {"0|0": 0.5, "1|1": 0.5}}
        code, out, _ = run(["decompose", "-i", write(tmp_path, "d.json", data)], capsys)
        result = json.loads(out)["result"]
        assert code == 0 and result["pruned_states"] == {"A": ["2"]}
        assert result["contributions_bits"]["{1}"] == pytest.approx(1.0)


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "infoattrib.cli", "lattice-stats", "--rank", "2",
                           "--format", "csv"], capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines()[2] == "players,4"
