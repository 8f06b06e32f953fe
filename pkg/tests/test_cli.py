import csv
import json
import random
from dataclasses import replace

import numpy as np
import pytest

from conftest import model_surface
from optionwave.blackscholes import BsParams, PriceSurface, generate_surface
from optionwave.cli import main, multistart_fit
from optionwave.fitting import ModelSpec, default_initial
from optionwave.lm import LmConfig
from optionwave.numerics import Grid1D
from optionwave.surface_io import ingest_market_csv, parse_surface_csv, write_surface_csv
from optionwave.waves import COMPONENTS, SolitaryParams

GEN = ["generate", "--kind", "call", "--strike", "100", "--rate", "0.05", "--vol", "0.2", "--expiry", "1"]


@pytest.fixture
def bs_csv(tmp_path):
    path = tmp_path / "bs.csv"
    assert main(GEN + ["--s", "50:150:51", "--t", "0:0.9:11", "--output", str(path)]) == 0
    return path


def soliton_csv(tmp_path):
    spec = ModelSpec(components=("soliton",), sigma=1.0, beta=1.0)
    s_grid, t_grid = Grid1D.linspace(-6, 6, 49), Grid1D.linspace(0, 1, 11)
    base = default_initial(PriceSurface(s_grid, t_grid, np.zeros((11, 49))), spec)
    truth = replace(base, amplitudes=(0, 0, 1.0, 0, 0), soliton=SolitaryParams(1.0, 1.0, 0.6))
    path = tmp_path / "soliton.csv"
    write_surface_csv(model_surface(truth, s_grid, t_grid), path)
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestGenerate:
    def test_rows_and_determinism(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        flags = GEN + ["--s", "50:150:101", "--t", "0:0.9:10"]
        assert main(flags + ["--output", str(a)]) == 0
        assert main(flags + ["--output", str(b)]) == 0
        rows = read_rows(a)
        assert rows[0] == ["s", "t", "price"] and len(rows) == 1011
        assert a.read_bytes() == b.read_bytes()
        assert b"\r\n" not in a.read_bytes()

    def test_put_bound(self, tmp_path):
        path = tmp_path / "put.csv"
        assert main(GEN[:2] + ["put"] + GEN[3:] + ["--s", "1:300:60", "--output", str(path)]) == 0
        rows = read_rows(path)[1:]
        tau_min = 1.0 - 0.9
        assert max(float(r[2]) for r in rows) <= 100 * np.exp(-0.05 * tau_min)

    def test_output_dir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("OPTIONWAVE_OUTPUT_DIR", str(tmp_path / "env"))
        assert main(["generate", "--s", "90:110:3", "--t", "0:0.5:2"]) == 0
        assert (tmp_path / "env" / "surface.csv").exists()

    def test_domain_error_exit(self, tmp_path, capsys):
        assert main(["generate", "--t", "0:1:5", "--output", str(tmp_path / "x.csv")]) == 3
        assert "t indices [4]" in capsys.readouterr().err

    def test_usage_error_exit(self):
        assert main(["generate", "--s", "50:150"]) == 2
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--bogus"])
        assert exc.value.code == 2

    def test_io_error_exit(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["generate", "--output", str(blocker / "sub" / "s.csv")]) == 5


class TestIngest:
    def test_round_trip(self, bs_csv):
        original = generate_surface(BsParams(100, 0.05, 0.2, 1.0), Grid1D.linspace(50, 150, 51), Grid1D.linspace(0, 0.9, 11))
        assert ingest_market_csv(bs_csv).equals(original)

    def test_shuffled_rows(self, bs_csv, tmp_path):
        lines = bs_csv.read_text().splitlines()
        body = lines[1:]
        random.Random(7).shuffle(body)
        shuffled = tmp_path / "shuffled.csv"
        shuffled.write_text("\n".join([lines[0]] + body) + "\n")
        a, b = ingest_market_csv(bs_csv), ingest_market_csv(shuffled)
        assert a.equals(b) and a.equals(b, rtol=0)

    def test_missing_node(self, bs_csv):
        lines = bs_csv.read_bytes().splitlines(keepends=True)
        removed = lines.pop(7).decode().split(",")
        with pytest.raises(ValueError, match=f"missing \\(s={removed[0]}, t={removed[1]}\\)"):
            parse_surface_csv(b"".join(lines))

    @pytest.mark.parametrize(
        "body,message",
        [
            (b"s,t,price\n1,0,1\n2,0,abc\n", ":3: non-numeric"),
            (b"s,t,price\n1,0,1\n2,0\n", ":3: expected 3 fields"),
            (b"s,t,price\n1,0,-1\n", ":2: negative price"),
            (b"s,t,price\n1,0,nan\n", ":2: non-finite"),
            (b"s,t,price\n1,0,1\n1,0,2\n", ":3: duplicate"),
            (b"x,y,z\n", ":1: expected header"),
            (b"s,t,price\n1,0,1\n2,0,1\n4,0,1\n", "not uniformly spaced"),
            (b"", "empty"),
        ],
    )
    def test_validation_errors(self, body, message):
        with pytest.raises(ValueError, match=message):
            parse_surface_csv(body, "in.csv")

    def test_lossless_and_hash(self, tmp_path):
        surf = generate_surface(BsParams(100, 0.05, 0.2, 1.0), Grid1D.linspace(50.1, 149.3, 7), Grid1D.linspace(0, 0.7, 3))
        path = tmp_path / "s.csv"
        write_surface_csv(surf, path)
        back = ingest_market_csv(path)
        assert np.array_equal(back.prices, surf.prices)
        assert len(back.meta["sha256"]) == 64

    def test_fit_rejects_bad_csv(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("s,t,price\n1,0,1\n2,0,oops\n")
        assert main(["fit", str(path), "--output-dir", str(tmp_path)]) == 3
        assert "bad.csv:3" in capsys.readouterr().err


class TestFit:
    def test_synthetic_round_trip(self, tmp_path):
        path = soliton_csv(tmp_path)
        flags = ["fit", str(path), "--components", "soliton", "--sigma", "1", "--beta", "1", "--output-dir", str(tmp_path)]
        assert main(flags) == 0
        doc = json.loads((tmp_path / "fit_report.json").read_text())
        assert doc["status"] == "converged-cost"
        assert doc["rmse"] < 1e-8
        assert doc["parameters"]["soliton.k"] == pytest.approx(0.6, rel=1e-6)
        for key in ("parameters", "cost_trace", "status", "rmse", "config", "input_hash"):
            assert key in doc
        assert set(doc["cost_trace"][0]) >= {"iter", "cost", "lambda", "accepted"}
        overlay = read_rows(tmp_path / "fit_overlay.csv")
        assert overlay[0] == ["s", "t", "price", "model"]
        assert max(abs(float(r[2]) - float(r[3])) for r in overlay[1:]) < 1e-7

    def test_nested_models_and_determinism(self, bs_csv, tmp_path):
        out = str(tmp_path)
        assert main(["fit", str(bs_csv), "--components", "soliton", "--name", "sol", "--output-dir", out]) == 0
        assert main(["fit", str(bs_csv), "--name", "all", "--output-dir", out]) == 0
        first = {f: (tmp_path / f).read_bytes() for f in ("all_report.json", "all_overlay.csv")}
        assert main(["fit", str(bs_csv), "--name", "all", "--output-dir", out]) == 0
        sol = json.loads((tmp_path / "sol_report.json").read_text())
        full = json.loads((tmp_path / "all_report.json").read_text())
        assert full["rmse"] <= sol["rmse"]
        assert full["components"] == list(COMPONENTS)
        for name, data in first.items():
            assert (tmp_path / name).read_bytes() == data
        costs = [full["initial_cost"]] + [r["cost"] for r in full["cost_trace"] if r["accepted"]]
        assert all(b <= a for a, b in zip(costs, costs[1:]))

    def test_over_parameterised(self, tmp_path):
        path = tmp_path / "tiny.csv"
        assert main(GEN + ["--s", "90:110:2", "--t", "0:0.5:2", "--output", str(path)]) == 0
        assert main(["fit", str(path), "--output-dir", str(tmp_path)]) == 2

    def test_config_file_and_precedence(self, tmp_path):
        path = soliton_csv(tmp_path)
        cfg = tmp_path / "fit.cfg"
        cfg.write_text("# soliton only\ncomponents = soliton\nsigma = 1\nbeta = 1\nmax-iter = 3\nname = fromfile\n")
        out = ["--output-dir", str(tmp_path)]
        assert main(["fit", str(path), "--config", str(cfg)] + out) == 0
        assert main(["fit", str(path), "--config", str(cfg), "--max-iter", "50", "--name", "flag"] + out) == 0
        a = json.loads((tmp_path / "fromfile_report.json").read_text())
        b = json.loads((tmp_path / "flag_report.json").read_text())
        assert a["config"]["max_iter"] == 3 and len(a["cost_trace"]) <= 3
        assert b["config"]["max_iter"] == 50 and b["rmse"] < 1e-8
        assert a["components"] == ["soliton"]

    def test_config_errors(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("no_such_flag = 1\n")
        assert main(["generate", "--config", str(cfg)]) == 2
        cfg.write_text("just words\n")
        assert main(["generate", "--config", str(cfg)]) == 2

    def test_config_supplies_positional(self, tmp_path):
        path = soliton_csv(tmp_path)
        cfg = tmp_path / "fit.cfg"
        cfg.write_text(f"surface = {path}\ncomponents = soliton\nsigma = 1\nbeta = 1\noutput_dir = {tmp_path}\n")
        assert main(["fit", "--config", str(cfg)]) == 0

    def test_multistart_seeded(self, bs_csv):
        cfg = LmConfig()
        surface = ingest_market_csv(bs_csv)
        spec = ModelSpec(components=("rogon1",), sigma=0.2, beta=0.05)
        a = multistart_fit(surface, spec, cfg, starts=3, seed=1)
        b = multistart_fit(surface, spec, cfg, starts=3, seed=1)
        single = multistart_fit(surface, spec, cfg, starts=1, seed=1)
        assert a[0].to_dict() == b[0].to_dict()
        assert a[0].final_cost <= single[0].final_cost


class TestVerify:
    def test_soliton(self, tmp_path):
        out = tmp_path / "v.json"
        assert main(["verify", "--component", "soliton", "--sigma", "1", "--beta", "1", "--k", "1", "--levels", "3", "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["oracle"] == "nls" and doc["passed"]
        assert 1.8 <= doc["order"] <= 2.2
        assert len(doc["levels"]) == 3 and set(doc["levels"][0]) == {"h_s", "h_t", "max_abs", "l2"}

    def test_packet_uses_linear_oracle(self, tmp_path):
        out = tmp_path / "v.json"
        assert main(["verify", "--component", "packet", "--output", str(out)]) == 0
        assert json.loads(out.read_text())["oracle"] == "linear"

    def test_two_rogon(self, tmp_path):
        out = tmp_path / "v.json"
        assert main(["verify", "--component", "two-rogon", "--alpha", "1", "--k", "0.5", "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["component"] == "rogon2" and doc["passed"]

    def test_negative_grid_values(self, tmp_path):
        out = tmp_path / "v.json"
        assert main(["verify", "--component", "soliton", "--s", "-8:8:161", "--t", "-1:1:41", "--output", str(out)]) == 0
        assert json.loads(out.read_text())["levels"][0]["h_s"] == pytest.approx(0.1)

    def test_failing_order_exit(self, tmp_path, capsys):
        # a constant packet has an exactly zero residual, hence no measurable order
        out = tmp_path / "v.json"
        assert main(["verify", "--component", "packet", "--terms", "1:0", "--output", str(out)]) == 4
        assert "outside" in capsys.readouterr().err
        doc = json.loads(out.read_text())
        assert doc["order"] is None and not doc["passed"]

    def test_domain_error(self):
        assert main(["verify", "--component", "shock", "--beta", "1"]) == 3
        assert main(["verify", "--component", "tsunami"]) == 2


class TestGreeks:
    def test_center(self, tmp_path):
        out = tmp_path / "g.csv"
        assert main(["greeks", "--component", "shock", "--sigma", "2", "--beta", "-0.5", "--output", str(out)]) == 0
        rows = read_rows(out)
        assert rows[0] == ["quantity", "re", "im", "modulus"]
        table = {r[0]: [float(x) for x in r[1:]] for r in rows[1:]}
        assert table["delta"][2] == pytest.approx(2.0, rel=1e-14)
        assert table["gamma"][2] == 0

    def test_analytic_vs_fd(self, tmp_path):
        base = ["greeks", "--component", "shock", "--sigma", "1", "--beta", "-2", "--k", "1.5", "--at-s", "0.8", "--at-t", "0.4"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(base + ["--output", str(a)]) == 0
        assert main(base + ["--method", "fd", "--output", str(b)]) == 0
        ra, rb = read_rows(a)[1:], read_rows(b)[1:]
        for x, y in zip(ra, rb):
            za, zb = complex(float(x[1]), float(x[2])), complex(float(y[1]), float(y[2]))
            assert abs(za - zb) <= 1e-5 * abs(za), x[0]

    def test_from_fit_report(self, tmp_path):
        path = soliton_csv(tmp_path)
        assert main(["fit", str(path), "--components", "soliton", "--sigma", "1", "--beta", "1", "--output-dir", str(tmp_path)]) == 0
        out = tmp_path / "g.csv"
        assert main(["greeks", "--params", str(tmp_path / "fit_report.json"), "--at-s", "0.3", "--output", str(out)]) == 0
        assert len(read_rows(out)) == 6

    def test_errors(self, tmp_path):
        assert main(["greeks", "--component", "soliton", "--method", "analytic"]) == 2
        bad = tmp_path / "r.json"
        bad.write_text("{}")
        assert main(["greeks", "--params", str(bad)]) == 3


class TestEvaluate:
    def test_extrapolation_flag(self, tmp_path):
        path = soliton_csv(tmp_path)
        assert main(["fit", str(path), "--components", "soliton", "--sigma", "1", "--beta", "1", "--output-dir", str(tmp_path)]) == 0
        out = tmp_path / "e.csv"
        assert main(["evaluate", str(tmp_path / "fit_report.json"), "--s", "0:0:1", "--t", "0:2:3", "--output", str(out)]) == 0
        rows = read_rows(out)
        assert rows[0] == ["s", "t", "model", "extrapolated"]
        assert [r[3] for r in rows[1:]] == ["0", "0", "1"]
        assert float(rows[1][2]) == pytest.approx(1.0, rel=1e-8)
