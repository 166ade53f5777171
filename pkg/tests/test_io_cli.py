import json

import numpy as np
import pytest

from mindist import cli, io
from mindist import divergence as dv
from mindist.errors import DegenerateDataError, ManifestError, NumericalError, ParameterError, ParseError
from mindist.estimate import Surface
from mindist.grid import GridSpec, grid_location
from mindist.kde import VelocityDataset
from mindist.pipeline import config_hash, run_pipeline

SMALL = GridSpec(n_r=6, n_theta=3)


def _write(path, text):
    path.write_text(text)
    return path


class TestVelocityFiles:
    def test_comma_line(self, tmp_path):
        data = io.parse_velocity_file(_write(tmp_path / "a.txt", "12.5,-3.2\n1,2\n"))
        np.testing.assert_array_equal(data.samples[0], [12.5, -3.2])

    def test_bad_value_names_line(self, tmp_path):
        p = _write(tmp_path / "a.txt", "# header\n1,2\n12.5, abc\n")
        with pytest.raises(ParseError) as info:
            io.parse_velocity_file(p)
        assert info.value.line == 3
        assert "3" in str(info.value)

    def test_wrong_column_count(self, tmp_path):
        with pytest.raises(ParseError):
            io.parse_velocity_file(_write(tmp_path / "a.txt", "1 2 3\n4 5\n"))

    def test_non_finite(self, tmp_path):
        with pytest.raises(ParseError):
            io.parse_velocity_file(_write(tmp_path / "a.txt", "1 2\nnan 5\n"))

    def test_whitespace_comments_and_order(self, tmp_path):
        p = _write(tmp_path / "a.txt", "# c\n\n 1.0\t2.0\n3 , 4\n  # late comment\n5 6\n")
        data = io.parse_velocity_file(p)
        np.testing.assert_array_equal(data.samples, [[1, 2], [3, 4], [5, 6]])

    def test_too_few_rows(self, tmp_path):
        with pytest.raises(DegenerateDataError):
            io.parse_velocity_file(_write(tmp_path / "a.txt", "# only\n1,2\n"))

    def test_observed_size_file(self, tmp_path):
        x = np.random.default_rng(0).normal(size=(3500, 2))
        io.write_velocity_file(tmp_path / "obs.txt", VelocityDataset(x), header="obs")
        back = io.parse_velocity_file(tmp_path / "obs.txt")
        assert back.n == 3500
        np.testing.assert_array_equal(back.samples, x)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            io.parse_velocity_file(tmp_path / "nope.txt")


def _small_manifest(tmp_path, skip=None, n=60):
    gen = np.random.default_rng(1)
    entries = []
    for k, j in SMALL.cells():
        if (k, j) == skip:
            continue
        p = tmp_path / f"c{k}_{j}.txt"
        io.write_velocity_file(p, VelocityDataset(gen.normal(size=(n, 2)) + [k, j]))
        entries.append(io.ManifestEntry(k, j, p))
    obs = tmp_path / "obs.txt"
    io.write_velocity_file(obs, VelocityDataset(gen.normal(size=(n, 2)) + [2, 2]))
    manifest = io.Manifest(SMALL, obs, tuple(entries), "toy")
    io.write_manifest(tmp_path / "manifest.json", manifest)
    return tmp_path / "manifest.json"


class TestManifest:
    def test_round_trip(self, tmp_path):
        m = io.read_manifest(_small_manifest(tmp_path))
        assert m.grid == SMALL and m.model_name == "toy" and len(m.entries) == SMALL.d
        stored = json.loads((tmp_path / "manifest.json").read_text())
        assert stored["entries"][0]["path"] == "c1_1.txt"

    def test_missing_cell(self, tmp_path):
        big = GridSpec()
        entries = tuple(io.ManifestEntry(k, j, tmp_path / "x") for k, j in big.cells()
                        if (k, j) != (3, 4))
        with pytest.raises(ManifestError, match=r"\(3,4\)"):
            io.Manifest(big, None, entries).validate(check_files=False)

    def test_missing_cell_fails_before_computation(self, tmp_path, monkeypatch):
        path = _small_manifest(tmp_path, skip=(3, 2))
        data = json.loads(path.read_text())
        called = []
        monkeypatch.setattr(io, "parse_velocity_file", lambda p: called.append(p))
        with pytest.raises(ManifestError):
            run_pipeline(io.Manifest(GridSpec.from_dict(data["grid"]), None, ()))
        assert called == []

    def test_duplicate_and_outside(self, tmp_path):
        e = io.ManifestEntry(1, 1, tmp_path / "x")
        with pytest.raises(ManifestError, match="duplicate"):
            io.Manifest(GridSpec(n_r=1, n_theta=1), None, (e, e)).validate(False)
        with pytest.raises(ManifestError, match="outside"):
            io.Manifest(GridSpec(n_r=1, n_theta=1), None,
                        (e, io.ManifestEntry(2, 1, tmp_path / "x"))).validate(False)

    def test_missing_file(self, tmp_path):
        path = _small_manifest(tmp_path)
        (tmp_path / "c2_3.txt").unlink()
        with pytest.raises(ManifestError, match="does not exist"):
            io.read_manifest(path)

    def test_bad_json(self, tmp_path):
        with pytest.raises(ManifestError):
            io.read_manifest(_write(tmp_path / "m.json", "{not json"))


class TestSurfaceFiles:
    def test_json_round_trip_bit_exact(self, tmp_path):
        vals = np.random.default_rng(3).random(216) * np.logspace(-30, 30, 216)
        s = Surface(GridSpec(), dv.KL, vals)
        io.write_surface(tmp_path / "s.json", s)
        back = io.read_surface(tmp_path / "s.json")
        assert back.values.tobytes() == vals.tobytes()
        assert back.measure == dv.KL and back.spec == GridSpec()

    def test_text_round_trip(self, tmp_path):
        vals = np.random.default_rng(4).random(SMALL.d)
        io.write_surface_text(tmp_path / "s.txt", Surface(SMALL, dv.AFFINITY, vals))
        lines = (tmp_path / "s.txt").read_text().splitlines()
        assert lines[0].startswith("#")
        assert lines[1].split()[:2] == ["1.7125", "5.0"]
        back = io.read_surface_text(tmp_path / "s.txt", SMALL, dv.AFFINITY)
        assert back.values.tobytes() == vals.tobytes()


class TestConfig:
    def test_defaults(self):
        c = io.parse_config_text("")
        assert (c.quad_resolution, c.bootstrap_b, c.level, c.alpha) == (256, 300, 0.95, 0.5)
        assert c.grid == GridSpec()

    def test_keys_and_aliases(self):
        c = io.parse_config_text("# run\nn_r = 6\nn-theta: 3\nthreads = 4\nB = 50\n"
                                 "refit_bandwidth = no\nalpha=0.25  # mix\n")
        assert c.grid == SMALL and c.workers == 4 and c.bootstrap_b == 50
        assert c.refit_bandwidth is False and c.alpha == 0.25

    @pytest.mark.parametrize("text", ["bogus = 1", "n_r = many", "just words",
                                      "level = 1.5", "quad_resolution = 8"])
    def test_errors(self, text):
        with pytest.raises(ParameterError):
            io.parse_config_text(text)

    def test_hash_tracks_content(self):
        a, b = io.RunConfig(), io.RunConfig(seed=1)
        assert config_hash(a) == config_hash(io.RunConfig())
        assert config_hash(a) != config_hash(b)


class TestPipeline:
    def test_stage_named_on_failure(self, tmp_path):
        path = _small_manifest(tmp_path)
        (tmp_path / "c1_2.txt").write_text("1,1\n1,1\n1,1\n")
        with pytest.raises(DegenerateDataError, match="fit"):
            run_pipeline(io.read_manifest(path))

    def test_toy_recovery(self, tmp_path):
        result = run_pipeline(io.read_manifest(_small_manifest(tmp_path)),
                              io.RunConfig(quad_resolution=64), measures=["affinity", "pe"])
        assert result.estimates[dv.AFFINITY].indices == (2, 2)
        assert result.estimates[dv.PE].indices == (2, 2)


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    root = tmp_path_factory.mktemp("gen")
    cfg = _write(root / "run.cfg", "n_r = 6\nn_theta = 3\nquad_resolution = 64\nB = 20\n")
    code = cli.main(["generate", "--out", str(root / "suite"), "--config", str(cfg),
                     "--n-per-location", "300", "--observed-cell", "4", "2",
                     "--observed-n", "600"])
    assert code == 0
    return root, cfg


class TestCli:
    def test_generate_outputs(self, generated):
        root, _ = generated
        m = io.read_manifest(root / "suite" / "manifest.json")
        assert m.grid == SMALL and len(m.entries) == 18
        meta = json.loads((root / "suite" / "generator.json").read_text())
        assert meta["observed_cell"] == {"k": 4, "j": 2}

    def test_estimate_two_measures(self, generated, capsys):
        root, cfg = generated
        out = root / "est"
        code = cli.main(["estimate", str(root / "suite" / "manifest.json"), "--out", str(out),
                         "--config", str(cfg), "--measure", "affinity", "--measure", "kl",
                         "--bootstrap", "--crossval"])
        assert code == 0
        assert sorted(p.name for p in out.glob("surface_*.json")) == [
            "surface_affinity.json", "surface_kl.json"]
        for name in ["estimates.json", "confidence_set.json", "crossval.json", "crossval.txt"]:
            assert (out / name).is_file()
        meta = json.loads((out / "metadata.json").read_text())
        assert {"config_hash", "seed", "grid", "measures", "wall_time_s"} <= set(meta)
        assert meta["measures"] == ["affinity", "kl"]
        est = json.loads((out / "estimates.json").read_text())
        for m in ("affinity", "kl"):
            k, j = est[m]["k"], est[m]["j"]
            assert max(abs(k - 4), abs(j - 2)) <= 1
        stdout = capsys.readouterr().out
        assert stdout.splitlines()[0].split("\t")[0] == "measure"

    def test_subcommands(self, generated, capsys):
        root, cfg = generated
        manifest = str(root / "suite" / "manifest.json")
        for cmd in ["surface", "bootstrap-ci", "crossval"]:
            assert cli.main([cmd, manifest, "--out", str(root / cmd), "--config", str(cfg)]) == 0
        assert (root / "surface" / "surface_affinity.txt").is_file()
        assert (root / "bootstrap-ci" / "confidence_set.json").is_file()
        assert (root / "crossval" / "crossval.txt").is_file()

    def test_rerun_is_bit_identical(self, generated):
        root, cfg = generated
        manifest = str(root / "suite" / "manifest.json")
        for name in ("a", "b"):
            cli.main(["surface", manifest, "--out", str(root / name), "--config", str(cfg)])
        a = (root / "a" / "surface_affinity.json").read_bytes()
        assert a == (root / "b" / "surface_affinity.json").read_bytes()

    @pytest.mark.parametrize("measure", ["affinity", "hd", "kl", "pe", "rpe", "rpe-direct"])
    def test_divergence(self, generated, capsys, measure):
        root, _ = generated
        sim = root / "suite" / "cells" / "k04_j02.txt"
        code = cli.main(["divergence", str(sim), str(root / "suite" / "observed.txt"),
                         "--measure", measure, "--quad-resolution", "64"])
        assert code == 0
        header, row = capsys.readouterr().out.strip().splitlines()
        assert header.split("\t") == ["measure", "value", "alpha"]
        assert np.isfinite(float(row.split("\t")[1]))

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["estimate"])
        assert info.value.code == 1
        assert cli.main(["divergence", "a", "b", "--measure", "nonsense"]) in (1, 2)

    def test_config_error_exit_1(self, tmp_path):
        cfg = _write(tmp_path / "bad.cfg", "bogus = 3\n")
        assert cli.main(["divergence", "a", "b", "--config", str(cfg)]) == 1

    def test_unknown_measure_exit_1(self, generated):
        root, _ = generated
        obs = str(root / "suite" / "observed.txt")
        assert cli.main(["divergence", obs, obs, "--measure", "nonsense"]) == 1

    def test_data_error_exit_2(self, tmp_path, capsys):
        bad = _write(tmp_path / "bad.txt", "1,2\n12.5, abc\n")
        assert cli.main(["divergence", str(bad), str(bad)]) == 2
        assert "bad.txt:2:" in capsys.readouterr().err

    def test_missing_manifest_cell_exit_2(self, tmp_path):
        path = _small_manifest(tmp_path, skip=(3, 2))
        assert cli.main(["surface", str(path), "--out", str(tmp_path / "o")]) == 2
        assert not (tmp_path / "o").exists()

    def test_numerical_error_exit_3(self, generated, monkeypatch):
        root, _ = generated
        obs = str(root / "suite" / "observed.txt")

        def boom(*a, **k):
            raise NumericalError("singular system")

        monkeypatch.setattr(cli, "fit_relative_ratio", boom)
        assert cli.main(["divergence", obs, obs, "--measure", "rpe-direct"]) == 3
