"""
Unit tests for the DuckDB run store.
"""

import os
import sys

import numpy as np
import pandas as pd
import pytest

# Add project root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from core.data import RunStore


@pytest.fixture
def store(tmp_path):
    with RunStore(tmp_path / "db" / "runs.duckdb") as s:
        yield s


class TestRunStore:
    """Test suite for run, training-log and metric storage."""

    def test_start_run(self, store):
        """Test run registration."""
        run_id = store.start_run("train", {"seed": 0}, variant="part_based")
        runs = store.get_runs()
        assert list(runs["run_id"]) == [run_id]
        assert runs.loc[0, "variant"] == "part_based"

    def test_train_log(self, store):
        """Test step records, with missing losses stored as NULL."""
        run_id = store.start_run("train", {})
        store.log_steps(run_id, [
            {"step": 1, "stage": "distill", "lr": 1e-3, "loss_distill": 1.9, "loss_total": 1.9},
            {"step": 0, "stage": "stage1", "lr": 1e-3, "loss_photo": 0.4, "loss_normal": 0.01,
             "loss_total": 0.41, "n_surface": 12},
        ])
        log = store.get_train_log(run_id)
        assert list(log["step"]) == [0, 1]
        assert log.loc[0, "n_surface"] == 12
        assert pd.isna(log.loc[1, "loss_photo"])
        assert log.loc[1, "loss_distill"] == pytest.approx(1.9)

    def test_empty_records(self, store):
        """Test that nothing is written for an empty batch."""
        run_id = store.start_run("train", {})
        store.log_steps(run_id, [])
        assert store.get_train_log(run_id).empty

    def test_eval_summary(self, store):
        """Test mean metrics per split."""
        run_id = store.start_run("eval", {})
        metrics = pd.DataFrame({"frame": [3, 4], "psnr": [20.0, 30.0], "ssim": [0.8, 0.9], "l1": [0.1, 0.05]})
        store.log_eval(run_id, "test", metrics)
        summary = store.get_eval_summary(run_id)
        assert list(summary["split"]) == ["test"]
        assert summary.loc[0, "frames"] == 2
        assert summary.loc[0, "psnr"] == pytest.approx(25.0)

    def test_ablation_summary_and_gap(self, store):
        """Test per-variant means over seeds and the PSNR gap between variants."""
        run_id = store.start_run("ablate", {}, "part_based,global_field")
        results = pd.DataFrame({
            "variant": ["part_based", "part_based", "global_field", "global_field"],
            "seed": [0, 1, 0, 1],
            "n_params": [1000, 1000, 990, 990],
            "psnr": [26.0, 27.0, 25.0, 25.5],
            "ssim": [0.9, 0.92, 0.88, 0.9],
            "l1": [0.05, 0.04, 0.06, 0.055],
        })
        store.log_ablation(run_id, results)
        summary = store.get_ablation_summary(run_id)
        assert list(summary["variant"]) == ["global_field", "part_based"]
        assert list(summary["seeds"]) == [2, 2]
        assert summary.loc[1, "psnr"] == pytest.approx(26.5)
        assert store.get_ablation_gap(run_id, "part_based", "global_field") == pytest.approx(1.25)
        assert np.isnan(store.get_ablation_gap(run_id, "part_based", "missing"))

    def test_reopen(self, tmp_path):
        """Test that runs persist across connections."""
        path = tmp_path / "runs.duckdb"
        with RunStore(path) as s:
            run_id = s.start_run("gen-synth", {})
        with RunStore(path) as s:
            assert run_id in set(s.get_runs()["run_id"])
