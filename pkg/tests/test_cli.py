import json
import subprocess
import sys

import numpy as np
import pytest

from fspecaug.cli import main
from fspecaug.feature_store import load_corpus, read_stats
from fspecaug.manifest import file_sha256
from fspecaug.render import read_pgm
from fspecaug.windowing import extract_windows


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "c.fsa"
    assert run("gen", "--utts", 3, "--dims", 16, "--frames", "30..60", "--seed", 7, "--out", path) == 0
    return path


class TestGen:
    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.fsa", tmp_path / "b.fsa"
        for p in (a, b):
            assert run("gen", "--utts", 10, "--dims", 80, "--frames", "50..200", "--seed", 7, "--out", p) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_default_dims(self, tmp_path):
        run("gen", "--utts", 1, "--frames", 3, "--out", tmp_path / "x.fsa")
        assert load_corpus(tmp_path / "x.fsa")[0].num_dims == 80

    @pytest.mark.parametrize("extra", [["--dims", "0"], ["--frames", "5..2"], ["--bogus"]])
    def test_usage_errors(self, tmp_path, extra):
        assert run("gen", "--out", tmp_path / "x.fsa", *extra) == 2

    def test_manifest_written(self, corpus_file):
        rec = json.loads(corpus_file.with_name("c.fsa.manifest.json").read_text())
        assert rec["command"] == "gen" and rec["master_seed"] == 7
        assert rec["output_sha256"] == {".": file_sha256(corpus_file)}
        assert rec["tool_version"]


class TestStatsNormalize:
    def test_recompute_oracle(self, corpus_file, tmp_path):
        stats, norm, stats2 = tmp_path / "s.txt", tmp_path / "n.fsa", tmp_path / "s2.txt"
        assert run("stats", "--in", corpus_file, "--out", stats) == 0
        assert run("normalize", "--in", corpus_file, "--stats", stats, "--out", norm) == 0
        assert run("stats", "--in", norm, "--out", stats2) == 0
        with open(stats2) as fh:
            again = read_stats(fh)
        assert np.abs(again.per_dim_mean).max() < 1e-5

    def test_identity_stats(self, corpus_file, tmp_path):
        stats = tmp_path / "id.txt"
        stats.write_text("D=16 frames=1\n" + "".join(f"{d},0,1\n" for d in range(16)))
        out = tmp_path / "n.fsa"
        assert run("normalize", "--in", corpus_file, "--stats", stats, "--out", out) == 0
        assert out.read_bytes() == corpus_file.read_bytes()

    def test_dimension_mismatch(self, corpus_file, tmp_path, capsys):
        stats = tmp_path / "bad.txt"
        stats.write_text("D=2 frames=1\n0,0,1\n1,0,1\n")
        assert run("normalize", "--in", corpus_file, "--stats", stats, "--out", tmp_path / "n.fsa") == 3
        assert "D=" in capsys.readouterr().err

    def test_missing_and_corrupt_input(self, tmp_path):
        assert run("stats", "--in", tmp_path / "nope.fsa", "--out", tmp_path / "s") == 3
        bad = tmp_path / "bad.fsa"
        bad.write_bytes(b"XXXXXXXX\0\0\0\0")
        assert run("stats", "--in", bad, "--out", tmp_path / "s") == 3


class TestAugment:
    def test_default_shape(self, tmp_path):
        src = tmp_path / "one.fsa"
        run("gen", "--utts", 1, "--frames", 100, "--out", src)
        out = tmp_path / "w.fsa"
        assert run("augment", "--in", src, "--out", out, "--seed", 1) == 0
        windows = load_corpus(out)
        assert len(windows) == 100
        assert all(w.values.shape == (41, 80) for w in windows)
        assert windows[5].utterance_id == "utt00000#5"

    def test_deterministic_and_parallel(self, corpus_file, tmp_path):
        outs = [tmp_path / f"{i}.fsa" for i in range(3)]
        common = ["augment", "--in", corpus_file, "--seed", 1, "--left", 6, "--right", 6, "--batch-size", 16]
        assert run(*common, "--out", outs[0]) == 0
        assert run(*common, "--out", outs[1]) == 0
        assert run(*common, "--out", outs[2], "--workers", 3) == 0
        assert outs[0].read_bytes() == outs[1].read_bytes() == outs[2].read_bytes()

    def test_identity_policy(self, corpus_file, tmp_path):
        out = tmp_path / "w.fsa"
        flags = ["--enable-warp", "false", "--enable-freq", "false", "--enable-time", "false"]
        assert run("augment", "--in", corpus_file, "--out", out, "--left", 2, "--right", 2, *flags) == 0
        got = load_corpus(out)
        ref = [w for m in load_corpus(corpus_file) for w in extract_windows(m, 2, 2)]
        assert [g.utterance_id for g in got] == [w.record_id() for w in ref]
        for g, w in zip(got, ref):
            assert g.values.tobytes() == w.values.tobytes()

    def test_config_file_and_override(self, corpus_file, tmp_path):
        cfg = tmp_path / "p.cfg"
        cfg.write_text("freq_f = 16\nenable_warp = false\n")
        out = tmp_path / "w.fsa"
        assert run("augment", "--in", corpus_file, "--out", out, "--config", cfg, "--freq_f", 4) == 0
        rec = json.loads(out.with_name("w.fsa.manifest.json").read_text())
        assert rec["policy"]["freq_f"] == 4 and rec["policy"]["enable_warp"] is False
        assert "config" in rec["inputs"]

    def test_invalid_policy(self, corpus_file, tmp_path, capsys):
        assert run("augment", "--in", corpus_file, "--out", tmp_path / "w.fsa", "--freq_f", 100) == 2
        assert "freq_F exceeds D" in capsys.readouterr().err

    def test_utterance_level(self, corpus_file, tmp_path):
        out = tmp_path / "w.fsa"
        assert run("augment", "--in", corpus_file, "--out", out, "--level", "utterance") == 0
        assert run("augment", "--in", corpus_file, "--out", out, "--level", "utterance", "--enable-warp", "true") == 2


class TestRender:
    def test_band_and_formats(self, tmp_path):
        src = tmp_path / "one.fsa"
        run("gen", "--utts", 1, "--frames", 50, "--dims", 16, "--out", src)
        win = tmp_path / "w.fsa"
        run("augment", "--in", src, "--out", win, "--left", 5, "--right", 5,
            "--enable-warp", "false", "--enable-time", "false", "--freq_f", 16, "--seed", 2)
        rdir = tmp_path / "r"
        assert run("render", "--in", win, "--out", rdir, "--select", "0,3-4", "--format", "both") == 0
        names = sorted(p.name for p in rdir.iterdir())
        assert names == [
            "000000_utt00000_0.csv", "000000_utt00000_0.pgm",
            "000003_utt00000_3.csv", "000003_utt00000_3.pgm",
            "000004_utt00000_4.csv", "000004_utt00000_4.pgm",
            "manifest.json",
        ]
        values = load_corpus(win)[3].values
        img = read_pgm((rdir / "000003_utt00000_3.pgm").read_bytes())
        zero_dims = np.flatnonzero((values == 0).all(axis=0))
        assert zero_dims.size > 0
        band = img[15 - zero_dims]
        assert (band == band[0, 0]).all()
        others = np.delete(img, 15 - zero_dims, axis=0)
        assert not (others == band[0, 0]).all(axis=1).any()

    def test_bad_select(self, corpus_file, tmp_path):
        assert run("render", "--in", corpus_file, "--out", tmp_path / "r", "--select", "9") == 2
        assert run("render", "--in", corpus_file, "--out", tmp_path / "r", "--select", "a") == 2


class TestReplay:
    def test_roundtrip(self, corpus_file, tmp_path, capsys):
        out = tmp_path / "w.fsa"
        run("augment", "--in", corpus_file, "--out", out, "--left", 5, "--right", 5, "--seed", 3)
        manifest = tmp_path / "w.fsa.manifest.json"
        assert run("replay", manifest) == 0
        assert run("replay", manifest, "--out", tmp_path / "again.fsa") == 0
        assert (tmp_path / "again.fsa").read_bytes() == out.read_bytes()

    def test_render_directory(self, corpus_file, tmp_path):
        rdir = tmp_path / "r"
        run("render", "--in", corpus_file, "--out", rdir, "--format", "pgm")
        assert run("replay", rdir / "manifest.json") == 0

    def test_detects_changed_input(self, corpus_file, tmp_path):
        out = tmp_path / "s.txt"
        run("stats", "--in", corpus_file, "--out", out)
        run("gen", "--utts", 2, "--dims", 16, "--frames", 9, "--seed", 1, "--out", corpus_file)
        assert run("replay", tmp_path / "s.txt.manifest.json") == 3


class TestBench:
    def test_reps_floor(self):
        assert run("bench", "--reps", 2) == 2

    def test_runs(self, tmp_path, capsys):
        out = tmp_path / "b.txt"
        assert run("bench", "--windows", 300, "--reps", 5, "--warmup", 0, "--dims", 16,
                   "--batch-size", 100, "--out", out) == 0
        text = capsys.readouterr().out
        assert text == out.read_text()
        assert sum(l.startswith("bench,") for l in text.splitlines()) == 3

    def test_corpus_too_small(self, corpus_file):
        assert run("bench", "--in", corpus_file, "--windows", 10**6, "--dims", 16) == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fspecaug", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "0.1.0" in proc.stdout
