import json

import numpy as np
import pytest

from smallchange.cli import main
from smallchange.masks import BinaryMask, load_mask, save_mask

from conftest import GOLDEN_ROOT


def run_cli(*args):
    return main([str(a) for a in args])


@pytest.fixture
def golden_run(tmp_path):
    out = tmp_path / "run"
    code = run_cli(
        "detect",
        "--manifest", GOLDEN_ROOT / "pairs.jsonl",
        "--fixtures", GOLDEN_ROOT / "fixtures",
        "--out", out,
    )
    assert code == 0
    return out


class TestSynthCommand:
    def test_synth_writes_dataset(self, tiny_bank, tmp_path):
        out = tmp_path / "ds"
        code = run_cli(
            "synth",
            "--bank", tiny_bank["bank_json"],
            "--backgrounds", tiny_bank["bg_manifest"],
            "--count", 5, "--seed", 7, "--out", out,
        )
        assert code == 0
        assert len((out / "samples.jsonl").read_text().splitlines()) == 5
        assert len(list((out / "live").glob("*.png"))) == 5

    def test_count_zero(self, tiny_bank, tmp_path):
        out = tmp_path / "ds0"
        code = run_cli(
            "synth",
            "--bank", tiny_bank["bank_json"],
            "--backgrounds", tiny_bank["bg_manifest"],
            "--count", 0, "--seed", 7, "--out", out,
        )
        assert code == 0
        assert (out / "samples.jsonl").read_text() == ""

    def test_missing_bank_exits_2(self, tiny_bank, tmp_path, capsys):
        code = run_cli(
            "synth",
            "--bank", tmp_path / "nope.json",
            "--backgrounds", tiny_bank["bg_manifest"],
            "--count", 1, "--out", tmp_path / "x",
        )
        assert code == 2
        assert "nope.json" in capsys.readouterr().err


class TestDetectCommand:
    def test_no_ovs_outputs_base_masks(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            "detect",
            "--manifest", GOLDEN_ROOT / "pairs.jsonl",
            "--fixtures", GOLDEN_ROOT / "fixtures",
            "--out", out, "--no-ovs",
        )
        assert code == 0
        for pair in ("pair-a", "pair-b", "pair-c"):
            fused = load_mask(out / "masks" / f"{pair}.fused.png")
            base = load_mask(out / "masks" / f"{pair}.base.png")
            assert fused == base
            record = json.loads((out / "records" / f"{pair}.run.json").read_text())
            assert record["mode"] == "base_only" and record["doi"] is None

    def test_repeated_runs_byte_identical(self, golden_run, tmp_path):
        out2 = tmp_path / "run2"
        assert run_cli(
            "detect",
            "--manifest", GOLDEN_ROOT / "pairs.jsonl",
            "--fixtures", GOLDEN_ROOT / "fixtures",
            "--out", out2,
        ) == 0
        files = sorted(p.relative_to(golden_run) for p in golden_run.rglob("*") if p.is_file())
        files2 = sorted(p.relative_to(out2) for p in out2.rglob("*") if p.is_file())
        assert files == files2
        for rel in files:
            assert (golden_run / rel).read_bytes() == (out2 / rel).read_bytes(), rel

    def test_output_always_one_of_the_two_inputs(self, golden_run):
        for pair in ("pair-a", "pair-b", "pair-c"):
            fused = load_mask(golden_run / "masks" / f"{pair}.fused.png")
            base = load_mask(golden_run / "masks" / f"{pair}.base.png")
            record = json.loads((golden_run / "records" / f"{pair}.run.json").read_text())
            if record["doi"]["decision"] == "adopt_base":
                assert fused == base

    def test_backend_unreachable_exit_1(self, tmp_path, capsys):
        code = run_cli(
            "detect",
            "--manifest", GOLDEN_ROOT / "pairs.jsonl",
            "--backend-url", "http://127.0.0.1:9",
            "--timeout", 0.2,
            "--out", tmp_path / "run",
        )
        assert code == 1
        err = capsys.readouterr().err
        assert "change" in err  # failing endpoint named

    def test_both_backends_is_usage_error(self, tmp_path, capsys):
        code = run_cli(
            "detect",
            "--manifest", GOLDEN_ROOT / "pairs.jsonl",
            "--fixtures", GOLDEN_ROOT / "fixtures",
            "--backend-url", "http://example.invalid",
            "--out", tmp_path / "x",
        )
        assert code == 2

    def test_no_backend_is_usage_error(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("SMALLCHANGE_BACKEND_URL", raising=False)
        code = run_cli(
            "detect",
            "--manifest", GOLDEN_ROOT / "pairs.jsonl",
            "--out", tmp_path / "x",
        )
        assert code == 2

    def test_missing_manifest_is_usage_error(self, tmp_path):
        code = run_cli(
            "detect",
            "--manifest", tmp_path / "none.jsonl",
            "--fixtures", GOLDEN_ROOT / "fixtures",
            "--out", tmp_path / "x",
        )
        assert code == 2

    def test_config_file_supplies_backend(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"fixtures": str(GOLDEN_ROOT / "fixtures")}))
        out = tmp_path / "run"
        assert run_cli(
            "detect",
            "--manifest", GOLDEN_ROOT / "pairs.jsonl",
            "--config", config,
            "--out", out,
        ) == 0

    def test_doi_upper_flag_changes_decision(self, tmp_path):
        # pair-a has score 0.5; with --doi-upper 0.4 it must keep the base mask
        out = tmp_path / "run"
        assert run_cli(
            "detect",
            "--manifest", GOLDEN_ROOT / "pairs.jsonl",
            "--fixtures", GOLDEN_ROOT / "fixtures",
            "--out", out, "--doi-upper", 0.4,
        ) == 0
        record = json.loads((out / "records" / "pair-a.doi.json").read_text())
        assert record["decision"] == "adopt_base"
        assert record["thresholds"]["upper"] == 0.4


class TestEvalCommand:
    @pytest.fixture
    def eval_setup(self, tmp_path, rng):
        gt_dir = tmp_path / "gt"
        pred_dir = tmp_path / "pred"
        rows = []
        for i, dataset in enumerate(["d1", "d1", "d2"]):
            arr = rng.random((12, 16)) < 0.4
            mask = BinaryMask(arr)
            save_mask(mask, gt_dir / f"p{i}.gt.png")
            save_mask(mask, pred_dir / f"p{i}.png")
            ref = tmp_path / f"p{i}.ref.png"
            live = tmp_path / f"p{i}.live.png"
            from smallchange.images import save_image

            save_image(np.zeros((12, 16, 3), dtype=np.uint8) + i, ref)
            save_image(np.zeros((12, 16, 3), dtype=np.uint8) + i + 100, live)
            rows.append(json.dumps({
                "pair_id": f"p{i}",
                "ref_path": str(ref),
                "live_path": str(live),
                "gt_path": str(gt_dir / f"p{i}.gt.png"),
                "dataset_id": dataset,
            }))
        manifest = tmp_path / "pairs.jsonl"
        manifest.write_text("".join(r + "\n" for r in rows))
        return manifest, pred_dir

    def test_perfect_predictions_score_one(self, eval_setup, tmp_path, capsys):
        manifest, pred_dir = eval_setup
        report_path = tmp_path / "report.json"
        code = run_cli("eval", "--manifest", manifest, "--pred", pred_dir, "--out", report_path)
        assert code == 0
        report = json.loads(report_path.read_text())
        assert report["aggregate"]["overall"]["mean_f"] == 1.0

    def test_compare_against_baseline(self, eval_setup, tmp_path):
        manifest, pred_dir = eval_setup
        report_path = tmp_path / "report.json"
        code = run_cli(
            "eval", "--manifest", manifest, "--pred", pred_dir,
            "--baseline", pred_dir, "--out", report_path,
        )
        assert code == 0
        report = json.loads(report_path.read_text())
        assert report["comparison"]["ties"] == 3
        assert report["comparison"]["overall"]["delta_mean_f"] == 0.0

    def test_empty_manifest_exit_2(self, tmp_path):
        manifest = tmp_path / "empty.jsonl"
        manifest.write_text("")
        code = run_cli("eval", "--manifest", manifest, "--pred", tmp_path)
        assert code == 2


class TestListObjectsCommand:
    def test_listing_matches_golden(self, golden_run, tmp_path, capsys):
        out_file = tmp_path / "listing.txt"
        code = run_cli("list-objects", "--run-dir", golden_run, "--out", out_file)
        assert code == 0
        expected = (GOLDEN_ROOT / "expected" / "listing.txt").read_text()
        assert out_file.read_text() == expected
        assert capsys.readouterr().out == expected

    def test_missing_records_exit_2(self, tmp_path):
        assert run_cli("list-objects", "--run-dir", tmp_path) == 2

    def test_all_filtered_run_has_listing_without_rows(self, tmp_path):
        # pair-c alone: its labels are all noise, so only the header remains
        manifest = tmp_path / "one.jsonl"
        manifest.write_text(json.dumps({
            "pair_id": "pair-c",
            "ref_path": str(GOLDEN_ROOT / "images" / "pair-c.ref.png"),
            "live_path": str(GOLDEN_ROOT / "images" / "pair-c.live.png"),
            "dataset_id": "golden",
        }) + "\n")
        out = tmp_path / "run"
        assert run_cli("detect", "--manifest", manifest,
                       "--fixtures", GOLDEN_ROOT / "fixtures", "--out", out) == 0
        assert run_cli("list-objects", "--run-dir", out) == 0
