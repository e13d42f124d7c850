import json

import numpy as np
import pytest

from rmtlab.cli import RunConfig, UsageError, main, parse_config


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestParseConfig:
    def test_basic_clt_flags(self):
        cfg = parse_config(
            "clt --law iid:gaussian --sigma 1:1 --c 1 --n 512 --R 800".split())
        assert cfg.command == "clt"
        assert (cfg.law, cfg.sigma, cfg.c, cfg.n, cfg.R) == ("iid:gaussian", "1:1", 1.0, 512, 800)
        assert cfg.seed == 42 and cfg.format == "json"

    def test_two_atom_sigma(self):
        cfg = parse_config("density --sigma 1:0.5,2:0.5 --c 0.5".split())
        assert cfg.sigma == "1:0.5,2:0.5" and cfg.c == 0.5

    def test_rejects_bad_lpball(self):
        with pytest.raises(UsageError):
            parse_config("clt --law lpball:0".split())

    def test_rejects_unknown_command(self):
        with pytest.raises(UsageError):
            parse_config(["plot"])

    def test_rejects_missing_command(self):
        with pytest.raises(UsageError):
            parse_config([])

    def test_config_file_with_flag_override(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"law": "sphere", "n": 128, "seed": 9}))
        cfg = parse_config(["clt", "--config", str(path), "--n", "256"])
        assert cfg.law == "sphere"
        assert cfg.n == 256       # flag wins
        assert cfg.seed == 9      # file wins over default

    def test_env_seed_overrides_default_only(self, monkeypatch):
        monkeypatch.setenv("RMTLAB_SEED", "7")
        assert parse_config(["clt"]).seed == 7
        assert parse_config("clt --seed 3".split()).seed == 3

    def test_roundtrip(self):
        cfg = parse_config("cov --z1 1i --z2 2i --n 64".split())
        again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(UsageError):
            RunConfig.from_dict({"command": "clt", "bogus": 1})


class TestDispatch:
    def test_density_csv_header(self, capsys, tmp_path):
        out = tmp_path / "d.csv"
        code, _, _ = run(["density", "--sigma", "1:1", "--c", "1", "--out", str(out)], capsys)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[1] == "lambda,rho"
        lam, rho = zip(*(map(float, l.split(",")) for l in lines[2:]))
        assert min(rho) >= 0.0 and max(lam) > 4.0

    def test_density_rerun_byte_identical(self, capsys, tmp_path):
        out = tmp_path / "d.csv"
        argv = ["density", "--sigma", "1:1", "--c", "1", "--out", str(out)]
        assert main(argv) == 0
        first = out.read_bytes()
        assert main(argv) == 0
        assert out.read_bytes() == first

    def test_clt_json_keys(self, capsys):
        code, out, _ = run(
            "clt --law iid:gaussian --sigma 1:1 --c 1 --n 32 --R 20 --phi poly:0,1".split(),
            capsys)
        assert code == 0
        doc = json.loads(out)
        assert "sample_variance" in doc and "predicted_variance" in doc
        assert doc["meta"]["config"]["n"] == 32

    def test_spectrum_deterministic(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = "spectrum --law sphere --sigma 1:1 --c 1 --n 24 --seed 5 --out".split()
        assert main(base + [str(a)]) == 0
        assert main(base + [str(b)]) == 0
        assert a.read_text().splitlines()[1:] == b.read_text().splitlines()[1:]

    def test_cov_output(self, capsys):
        code, out, _ = run(
            "cov --law iid:gaussian --sigma 1:1 --c 1 --n 32 --R 20 --z1 1i --z2 2i".split(),
            capsys)
        assert code == 0
        doc = json.loads(out)
        assert len(doc["empirical"]) == 2 and len(doc["predicted"]) == 2

    def test_norm_output(self, capsys):
        code, out, _ = run("norm --phi bump:0,1 --delta 0.5".split(), capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["s"] == 2.5 and doc["norm"] > 0

    def test_variance_output(self, capsys):
        code, out, _ = run(
            "variance --law iid:gaussian --sigma 1:1 --c 1 --phi poly:0,1 --eta 0.16,0.08".split(),
            capsys)
        assert code == 0
        doc = json.loads(out)
        assert len(doc["v_eta"]) == 2

    def test_usage_error_exit_1(self, capsys):
        code, _, err = run(["clt", "--law", "lpball:0"], capsys)
        assert code == 1 and "error" in err

    def test_missing_phi_exit_1(self, capsys):
        code, _, _ = run("clt --law iid:gaussian --n 32 --R 10".split(), capsys)
        assert code == 1

    def test_numerical_failure_exit_2(self, capsys):
        # a spike narrower than the Fourier grid resolves triggers the
        # grid-resolution guard in the norm command
        code, _, _ = run(["norm", "--phi", "bump:0,0.0001"], capsys)
        assert code == 2
