import csv
import json
import math

import numpy as np
import pytest

from support import MBALT_RECORDS, table2_mismatches
from trunclife.cli import main
from trunclife.estimation import PairSample
from trunclife.io import PairFileError, read_pairs_csv, write_pairs_csv
from trunclife.population import truncated_geometric
from trunclife.tables import estimate_table

GEOM = "truncated-geometric:p=0.2,lo=1,hi=24"
UNIF = "discrete-uniform:lo=1,hi=10"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestTables:
    def test_reference_table(self, mbalt):
        table = estimate_table(mbalt[0])
        assert table2_mismatches(table) == []

    def test_na_conventions(self, mbalt):
        table = estimate_table(mbalt[0])
        i36 = 36 - 4
        assert table.lifetime["lambda"][i36] == 0 and table.lifetime["se_lambda"][i36] == 0
        assert np.isnan(table.lifetime["lambda_lo"][i36])
        assert np.isnan(table.lifetime["se_lambda"][-1])
        assert np.isnan(table.truncation["se_beta"][0])
        assert table.undefined_lambda == [] and table.undefined_beta == []

    def test_interval_contains_estimate(self, mbalt):
        t = estimate_table(mbalt[0])
        ok = np.isfinite(t.lifetime["lambda_lo"])
        lam = t.lifetime["lambda"][ok]
        assert np.all(t.lifetime["lambda_lo"][ok] < lam) and np.all(lam < t.lifetime["lambda_hi"][ok])

    def test_csv_layout(self, mbalt, tmp_path):
        t = estimate_table(mbalt[0])
        t.write_csv(tmp_path / "e.csv")
        rows = read_csv(tmp_path / "e.csv")
        assert len(rows) == 34
        assert rows[0]["age"] == "4" and rows[0]["se_beta"] == "NA"
        assert rows[-1]["beta"] == ""  # outside the truncation support
        assert rows[-1]["se_lambda"] == "NA"

    def test_undefined_listed(self):
        from trunclife.population import SupportFrame

        sample = PairSample.from_pairs([(3, 1), (2, 1), (6, 5)], frame=SupportFrame(0, 5, 6))
        t = estimate_table(sample)
        assert t.undefined_lambda == [4]
        assert t.to_dict()["undefined"]["lambda"] == [4]


class TestPairFiles:
    def test_round_trip(self, mbalt, tmp_path):
        path = write_pairs_csv(mbalt[0], tmp_path / "p.csv")
        again = read_pairs_csv(path, frame=mbalt[0].frame)
        np.testing.assert_array_equal(again.counts, mbalt[0].counts)

    def test_all_bad_rows_reported(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("x,y\n3,1\n2,5\nfoo,1\n4\n")
        with pytest.raises(PairFileError) as err:
            read_pairs_csv(path)
        assert [e["line"] for e in err.value.errors] == [3, 4, 5]

    def test_bad_header(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("a,b\n1,1\n")
        with pytest.raises(PairFileError):
            read_pairs_csv(path)


class TestCli:
    def test_estimate_reproduces_table(self, mbalt, tmp_path):
        pairs = write_pairs_csv(mbalt[0], tmp_path / "pairs.csv")
        out = tmp_path / "out"
        assert main(["estimate", "--pairs", str(pairs), "--out", str(out)]) == 0
        rows = {int(r["age"]): r for r in read_csv(out / "estimates.csv")}
        assert round(float(rows[25]["lambda"]), 3) == 0.711
        assert rows[37]["se_lambda"] == "NA"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "estimate"
        assert list(manifest["inputs"].values())[0] and len(list(manifest["inputs"].values())[0]) == 64

    def test_ingest_then_estimate(self, tmp_path):
        pairs = tmp_path / "pairs.csv"
        assert main(["ingest", "--records", str(MBALT_RECORDS), "--delta", "3", "--m", "18", "--out", str(pairs)]) == 0
        report = json.loads((tmp_path / "pairs.report.json").read_text())
        assert report["censored_assigned"] == 8
        assert main(["estimate", "--pairs", str(pairs), "--out", str(tmp_path / "est")]) == 0
        data = json.loads((tmp_path / "est" / "estimates.json").read_text())
        # origination 0..18 gives 19 truncation points (4..22)
        assert data["frame"] == {"delta": 3, "m": 19, "omega": 37}

    def test_weighted_population_file(self, geometric_uniform, tmp_path):
        pop = geometric_uniform
        sample = PairSample(pop.frame, 250 * pop.h)
        pairs = write_pairs_csv(sample, tmp_path / "w.csv")
        assert main(["estimate", "--pairs", str(pairs), "--out", str(tmp_path / "o")]) == 0
        data = json.loads((tmp_path / "o" / "estimates.json").read_text())
        lam = np.array(data["lifetime"]["lambda"], dtype=float)
        np.testing.assert_allclose(lam, pop.lam, atol=1e-12)
        np.testing.assert_allclose(data["truncation"]["beta"], pop.beta, atol=1e-12)

    @pytest.mark.parametrize("content", ["", "x,y\n", "x,y\n2,1\n1,3\n"])
    def test_bad_pairs_exit_1(self, tmp_path, capsys, content):
        path = tmp_path / "bad.csv"
        path.write_text(content)
        assert main(["estimate", "--pairs", str(path), "--out", str(tmp_path)]) == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"]

    def test_malformed_line_numbers(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("x,y\n2,1\n1,3\n")
        main(["estimate", "--pairs", str(path)])
        assert json.loads(capsys.readouterr().err)["errors"][0]["line"] == 3

    def test_partial_frame_rejected(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("x,y\n2,1\n")
        assert main(["estimate", "--pairs", str(path), "--delta", "0"]) == 1

    def test_simulate_config_env_and_seed(self, tmp_path, monkeypatch):
        cfg = tmp_path / "sim.json"
        cfg.write_text(json.dumps({"pmf_x": GEOM, "pmf_y": UNIF, "n": 500, "replicates": 30, "seed": 9}))
        monkeypatch.setenv("TRUNCLIFE_OUT", str(tmp_path / "a"))
        assert main(["simulate", "--config", str(cfg)]) == 0
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "coverage.csv").read_text()
        b = (tmp_path / "b" / "coverage.csv").read_text()
        assert a == b
        manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert manifest["seed"] == 9 and manifest["config"]["n"] == 500

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "sim.json"
        cfg.write_text(json.dumps({"pmf_x": GEOM, "pmf_y": UNIF, "n": 500, "replicates": 30, "seed": 9}))
        assert main(["simulate", "--config", str(cfg), "--n", "300", "--out", str(tmp_path)]) == 0
        assert json.loads((tmp_path / "summary.json").read_text())["plan"]["n"] == 300

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert main(["simulate", "--config", str(cfg)]) == 1

    def test_generated_seed_is_printed(self, tmp_path, capsys):
        assert main(["simulate", "--pmf-x", GEOM, "--pmf-y", UNIF, "--n", "200",
                     "--replicates", "5", "--out", str(tmp_path)]) == 0
        seed = int(capsys.readouterr().out.split("seed: ")[1].split()[0])
        assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == seed

    def test_rejection_floor_exits_1(self, tmp_path):
        f = tmp_path / "f.json"
        g = tmp_path / "g.json"
        f.write_text(json.dumps({"lo": 1, "probs": [0.99999, 0.00001]}))
        g.write_text(json.dumps({"lo": 1, "probs": [1e-9, 1 - 1e-9]}))
        assert main(["simulate", "--pmf-x", str(f), "--pmf-y", str(g), "--n", "10", "--replicates", "1",
                     "--seed", "1", "--sampler", "rejection", "--out", str(tmp_path)]) == 1

    def test_uniform_test_command(self, mbalt, tmp_path, capsys):
        pairs = write_pairs_csv(mbalt[0], tmp_path / "pairs.csv")
        assert main(["test-uniform", "--pairs", str(pairs), "--variance", "estimate"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["dof"] == 18
        assert result["statistic"] == pytest.approx(1530.6, rel=0.01)

    def test_oracle(self, capsys):
        assert main(["oracle", "--pmf-x", GEOM, "--pmf-y", UNIF]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["alpha"] == pytest.approx(0.4463, abs=1e-4)
        f = truncated_geometric(0.2, 1, 24).probs
        assert data["lifetime"]["lambda"][0] == pytest.approx(f[0], abs=1e-12)
        assert data["lifetime"]["sigma_f"][-1] == 0
        assert not math.isnan(data["truncation"]["sigma_g"][-1])

    def test_ingest_hard_errors_exit_1(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("contract_id,origination_month,age,payment\n"
                        "A,10,12,5\nA,10,13,0\nA,10,14,0\nA,10,15,0\n"
                        "B,10,12,5\nB,10,14,0\n")
        assert main(["ingest", "--records", str(path), "--delta", "3", "--m", "18",
                     "--out", str(tmp_path / "p.csv")]) == 1
        assert (tmp_path / "p.csv").exists()
