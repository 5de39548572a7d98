import json
import subprocess
import sys

import numpy as np
import pytest
import jsonschema

from dda import gen_clean, gen_pair, load_png, save_png
from dda.cli import main

SCORE_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "properties": {
            "index": {"type": "integer", "minimum": 0},
            "row": {"type": "integer", "minimum": 0},
            "col": {"type": "integer", "minimum": 0},
            "colorfulness": {"type": "number", "minimum": 0},
            "frequency_mean": {"type": "number", "minimum": 0},
            "score": {"type": "number", "minimum": 0},
        },
        "required": ["index", "row", "col", "colorfulness", "frequency_mean", "score"],
        "additionalProperties": False,
    },
}


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, argv):
    code, out, err = run(capsys, argv)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture()
def moire_png(tmp_path):
    path = tmp_path / "moire.png"
    save_png(gen_pair(3, 0, 64, 64, moire_free_rate=0.0)[1], path)
    return path


@pytest.fixture()
def weights_file(tmp_path):
    from dda import SupernetSpec, init_weights, save_weights

    path = tmp_path / "net.ddaw"
    save_weights(init_weights(SupernetSpec(num_layers=3, base_channels=8), 2, dtype=np.float32), path)
    return path


class TestScore:
    def test_four_tiles(self, capsys, moire_png):
        records = run_json(
            capsys, ["score", str(moire_png), "--patch-height", "32", "--patch-width", "32"]
        )
        jsonschema.validate(records, SCORE_SCHEMA)
        assert [r["index"] for r in records] == [0, 1, 2, 3]
        assert [(r["row"], r["col"]) for r in records] == [(0, 0), (0, 32), (32, 0), (32, 32)]

    def test_constant_image_black_heatmap(self, capsys, tmp_path):
        img_path = tmp_path / "flat.png"
        save_png(np.full((32, 32, 3), 0.5), img_path)
        heat_path = tmp_path / "heat.png"
        records = run_json(
            capsys,
            [
                "score",
                str(img_path),
                "--patch-height",
                "16",
                "--patch-width",
                "16",
                "--heatmap",
                str(heat_path),
            ],
        )
        assert all(r["score"] == 0.0 for r in records)
        assert np.array_equal(load_png(heat_path), np.zeros((32, 32, 3)))

    def test_heatmap_normalized(self, capsys, moire_png, tmp_path):
        heat_path = tmp_path / "heat.png"
        run_json(
            capsys,
            ["score", str(moire_png), "--patch-height", "32", "--patch-width", "32", "--heatmap", str(heat_path)],
        )
        heat = load_png(heat_path)
        assert heat.shape == (64, 64, 3)
        assert heat.max() == 1.0

    def test_missing_image(self, capsys, tmp_path):
        code, _, err = run(capsys, ["score", str(tmp_path / "absent.png")])
        assert code == 1
        assert "error:" in err


class TestRoute:
    def test_per_image_groups(self, capsys, moire_png):
        records = run_json(
            capsys, ["route", str(moire_png), "--patch-height", "16", "--patch-width", "16"]
        )
        assert len(records) == 16
        groups = [r["group"] for r in records]
        sizes = [groups.count(g) for g in range(3)]
        assert sizes == [6, 6, 4]
        widths = {r["group"]: r["width"] for r in records}
        assert widths[0] == 0.25 and widths[2] == 0.75
        by_rank = sorted(records, key=lambda r: r["rank"])
        assert [r["group"] for r in by_rank] == sorted(r["group"] for r in records)

    def test_threshold_policy_with_cutpoints(self, capsys, moire_png):
        records = run_json(
            capsys,
            [
                "route",
                str(moire_png),
                "--patch-height",
                "16",
                "--patch-width",
                "16",
                "--policy",
                "threshold",
                "--cutpoints",
                "0.001,0.01",
            ],
        )
        for r in records:
            assert r["group"] in (0, 1, 2)

    def test_threshold_policy_needs_source(self, capsys, moire_png):
        code, _, err = run(capsys, ["route", str(moire_png), "--policy", "threshold"])
        assert code == 1
        assert "cutpoints" in err

    def test_groups_must_match_widths(self, capsys, moire_png):
        code, _, err = run(capsys, ["route", str(moire_png), "--groups", "4"])
        assert code == 1
        assert "does not match" in err


class TestTrain:
    @pytest.fixture()
    def manifest(self, capsys, tmp_path):
        out = tmp_path / "ds"
        payload = run_json(capsys, ["gen", "6", "9", str(out), "--patch-height", "16", "--patch-width", "16"])
        return payload["manifest"]

    def test_zero_epochs(self, capsys, tmp_path, manifest):
        out = tmp_path / "w.ddaw"
        payload = run_json(
            capsys,
            ["train", manifest, "--out", str(out), "--epochs", "0", "--layers", "2", "--channels", "4"],
        )
        assert payload["log_entries"] == 0
        assert payload["final_mean_loss"] is None
        assert out.exists()
        assert (tmp_path / "w.ddaw.log").read_text() == ""

    def test_deterministic_weights_file(self, capsys, tmp_path, manifest):
        outs = []
        for name in ("a.ddaw", "b.ddaw"):
            out = tmp_path / name
            run_json(
                capsys,
                [
                    "train",
                    manifest,
                    "--out",
                    str(out),
                    "--epochs",
                    "1",
                    "--layers",
                    "2",
                    "--channels",
                    "4",
                    "--seed",
                    "5",
                ],
            )
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_log_is_json_lines(self, capsys, tmp_path, manifest):
        out = tmp_path / "w.ddaw"
        payload = run_json(
            capsys,
            ["train", manifest, "--out", str(out), "--epochs", "2", "--layers", "2", "--channels", "4"],
        )
        lines = (tmp_path / "w.ddaw.log").read_text().splitlines()
        assert len(lines) == payload["log_entries"]
        for line in lines:
            rec = json.loads(line)
            assert set(rec) == {"epoch", "width", "mean_loss"}

    def test_empty_manifest_fails(self, capsys, tmp_path):
        bad = tmp_path / "manifest.json"
        bad.write_text("[]")
        code, _, err = run(capsys, ["train", str(bad), "--out", str(tmp_path / "w.ddaw")])
        assert code == 1
        assert "error:" in err


class TestInfer:
    def test_degenerate_widths_match_full(self, capsys, tmp_path, moire_png, weights_file):
        full_out = tmp_path / "full.png"
        payload_full = run_json(
            capsys,
            [
                "infer", str(moire_png), str(weights_file),
                "--out", str(full_out), "--full",
                "--patch-height", "16", "--patch-width", "16",
            ],
        )
        dda_out = tmp_path / "dda.png"
        payload_dda = run_json(
            capsys,
            [
                "infer", str(moire_png), str(weights_file),
                "--out", str(dda_out), "--widths", "1.0,1.0,1.0",
                "--patch-height", "16", "--patch-width", "16",
            ],
        )
        assert np.array_equal(load_png(dda_out), load_png(full_out))
        assert payload_dda["total_dda"] == payload_full["total_baseline"]
        assert payload_dda["reduction_fraction"] == 0.0

    def test_default_widths_reduce_flops(self, capsys, tmp_path, moire_png, weights_file):
        out = tmp_path / "out.png"
        payload = run_json(
            capsys,
            [
                "infer", str(moire_png), str(weights_file),
                "--out", str(out),
                "--patch-height", "16", "--patch-width", "16",
            ],
        )
        assert payload["reduction_fraction"] > 0.0
        assert payload["total_dda"] < payload["total_baseline"]
        assert out.exists()

    def test_flops_match_route_groups(self, capsys, tmp_path, moire_png, weights_file):
        from helpers import flops_reference

        records = run_json(
            capsys, ["route", str(moire_png), "--patch-height", "16", "--patch-width", "16"]
        )
        widths = (0.25, 0.5, 0.75)
        expected = sum(flops_reference(3, 8, 3, True, widths[r["group"]], 16, 16) for r in records)
        payload = run_json(
            capsys,
            [
                "infer", str(moire_png), str(weights_file),
                "--out", str(tmp_path / "o.png"),
                "--patch-height", "16", "--patch-width", "16",
            ],
        )
        assert payload["total_dda"] == expected

    def test_bad_weights_file(self, capsys, tmp_path, moire_png):
        bad = tmp_path / "bad.ddaw"
        bad.write_bytes(b"JUNKJUNKJUNKJUNK")
        code, _, err = run(
            capsys, ["infer", str(moire_png), str(bad), "--out", str(tmp_path / "o.png")]
        )
        assert code == 1
        assert "error:" in err


class TestBench:
    def test_single_repetition(self, capsys, moire_png, weights_file):
        payload = run_json(
            capsys,
            [
                "bench", str(moire_png), str(weights_file),
                "--repetitions", "1",
                "--patch-height", "16", "--patch-width", "16",
            ],
        )
        assert payload["repetitions"] == 1
        for side in ("full", "dda"):
            stats = payload[side]
            assert stats["median_seconds"] == stats["min_seconds"]
            assert stats["median_seconds"] > 0.0
        assert payload["dda"]["report"]["total_dda"] < payload["full"]["report"]["total_baseline"]

    def test_rejects_zero_repetitions(self, capsys, moire_png, weights_file):
        code, _, err = run(
            capsys, ["bench", str(moire_png), str(weights_file), "--repetitions", "0"]
        )
        assert code == 1
        assert "repetitions" in err


class TestMetrics:
    def test_identical_images(self, capsys, tmp_path):
        path = tmp_path / "img.png"
        save_png(gen_clean(4, 24, 24), path)
        payload = run_json(capsys, ["metrics", str(path), str(path)])
        assert payload == {"psnr_db": "inf", "ssim": 1.0, "delta_e": 0.0}

    def test_mismatched_dims(self, capsys, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        save_png(np.zeros((8, 8, 3)), a)
        save_png(np.zeros((8, 9, 3)), b)
        code, _, err = run(capsys, ["metrics", str(a), str(b)])
        assert code == 1
        assert "error:" in err


class TestGen:
    def test_repeat_identical(self, capsys, tmp_path):
        m1 = run_json(capsys, ["gen", "3", "7", str(tmp_path / "d1"), "--patch-height", "16", "--patch-width", "16"])
        m2 = run_json(capsys, ["gen", "3", "7", str(tmp_path / "d2"), "--patch-height", "16", "--patch-width", "16"])
        b1 = open(m1["manifest"], "rb").read()
        b2 = open(m2["manifest"], "rb").read()
        assert b1 == b2


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        path = tmp_path / "img.png"
        save_png(gen_clean(5, 16, 16), path)
        proc = subprocess.run(
            [sys.executable, "-m", "dda", "metrics", str(path), str(path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["ssim"] == 1.0

    def test_env_thread_fallback(self, capsys, tmp_path, monkeypatch, moire_png, weights_file):
        monkeypatch.setenv("DDA_THREADS", "2")
        payload = run_json(
            capsys,
            [
                "infer", str(moire_png), str(weights_file),
                "--out", str(tmp_path / "o.png"),
                "--patch-height", "16", "--patch-width", "16",
            ],
        )
        assert payload["total_dda"] > 0
