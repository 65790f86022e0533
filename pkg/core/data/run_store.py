"""
Run Store Module

DuckDB database of pipeline runs: one row per command invocation, the
per-step training log, per-frame evaluation metrics and per-seed
ablation results, queryable as pandas DataFrames.
"""

import json
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any

import duckdb
import pandas as pd

TRAIN_LOG_COLUMNS = [
    "step", "stage", "lr", "loss_photo", "loss_normal", "loss_distill", "loss_total",
    "n_surface", "wall_ms",
]
EVAL_COLUMNS = ["frame", "psnr", "ssim", "l1"]
ABLATION_COLUMNS = ["variant", "seed", "n_params", "psnr", "ssim", "l1"]


class RunStore:
    """
    DuckDB-backed history of runs, training steps and evaluation metrics.

    Usable as a context manager; the connection closes on exit.
    """

    def __init__(self, db_path: str | Path):
        """
        Args:
            db_path: DuckDB database file (created with its parent directory)
        """
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self.conn: duckdb.DuckDBPyConnection | None = duckdb.connect(str(self.db_path))
        self._initialize()

    def _ensure_connection(self) -> duckdb.DuckDBPyConnection:
        if self.conn is None:
            self.conn = duckdb.connect(str(self.db_path))
        return self.conn

    def _initialize(self) -> None:
        conn = self._ensure_connection()
        conn.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                run_id VARCHAR PRIMARY KEY,
                command VARCHAR NOT NULL,
                variant VARCHAR,
                config JSON,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)
        conn.execute("""
            CREATE TABLE IF NOT EXISTS train_log (
                run_id VARCHAR NOT NULL,
                step BIGINT NOT NULL,
                stage VARCHAR,
                lr DOUBLE,
                loss_photo DOUBLE,
                loss_normal DOUBLE,
                loss_distill DOUBLE,
                loss_total DOUBLE,
                n_surface BIGINT,
                wall_ms DOUBLE,
                FOREIGN KEY (run_id) REFERENCES runs(run_id)
            )
        """)
        conn.execute("""
            CREATE TABLE IF NOT EXISTS eval_metrics (
                run_id VARCHAR NOT NULL,
                split VARCHAR NOT NULL,
                frame BIGINT NOT NULL,
                psnr DOUBLE,
                ssim DOUBLE,
                l1 DOUBLE,
                FOREIGN KEY (run_id) REFERENCES runs(run_id)
            )
        """)
        conn.execute("""
            CREATE TABLE IF NOT EXISTS ablation (
                run_id VARCHAR NOT NULL,
                variant VARCHAR NOT NULL,
                seed BIGINT NOT NULL,
                n_params BIGINT,
                psnr DOUBLE,
                ssim DOUBLE,
                l1 DOUBLE,
                FOREIGN KEY (run_id) REFERENCES runs(run_id)
            )
        """)
        conn.execute("CREATE INDEX IF NOT EXISTS idx_train_log_run ON train_log(run_id, step)")

    def start_run(self, command: str, config: dict[str, Any], variant: str | None = None) -> str:
        """Register a run and return its id."""
        conn = self._ensure_connection()
        run_id = f"{datetime.now():%Y%m%dT%H%M%S}-{uuid.uuid4().hex[:8]}"
        conn.execute(
            "INSERT INTO runs (run_id, command, variant, config) VALUES (?, ?, ?, ?)",
            [run_id, command, variant, json.dumps(config, sort_keys=True)],
        )
        return run_id

    def log_steps(self, run_id: str, records: list[dict[str, Any]]) -> None:
        """Append training-log records (missing columns become NULL)."""
        if not records:
            return
        conn = self._ensure_connection()
        steps = pd.DataFrame(records).reindex(columns=TRAIN_LOG_COLUMNS)
        steps.insert(0, "run_id", run_id)
        conn.register("steps_df", steps)
        try:
            conn.execute(f"INSERT INTO train_log SELECT {', '.join(['run_id', *TRAIN_LOG_COLUMNS])} "
                         "FROM steps_df")
        finally:
            conn.unregister("steps_df")

    def log_eval(self, run_id: str, split: str, metrics: pd.DataFrame) -> None:
        """Store per-frame metrics with columns ``frame, psnr, ssim, l1``."""
        if metrics.empty:
            return
        conn = self._ensure_connection()
        rows = metrics.reindex(columns=EVAL_COLUMNS).copy()
        rows.insert(0, "split", split)
        rows.insert(0, "run_id", run_id)
        conn.register("eval_df", rows)
        try:
            conn.execute("INSERT INTO eval_metrics SELECT run_id, split, frame, psnr, ssim, l1 "
                         "FROM eval_df")
        finally:
            conn.unregister("eval_df")

    def log_ablation(self, run_id: str, results: pd.DataFrame) -> None:
        """Store one row per trained model: ``variant, seed, n_params, psnr, ssim, l1``."""
        if results.empty:
            return
        conn = self._ensure_connection()
        rows = results.reindex(columns=ABLATION_COLUMNS).copy()
        rows.insert(0, "run_id", run_id)
        conn.register("ablation_df", rows)
        try:
            conn.execute(f"INSERT INTO ablation SELECT {', '.join(['run_id', *ABLATION_COLUMNS])} "
                         "FROM ablation_df")
        finally:
            conn.unregister("ablation_df")

    def get_runs(self) -> pd.DataFrame:
        conn = self._ensure_connection()
        return conn.execute(
            "SELECT run_id, command, variant, created_at FROM runs ORDER BY created_at"
        ).fetchdf()

    def get_train_log(self, run_id: str) -> pd.DataFrame:
        conn = self._ensure_connection()
        return conn.execute(
            "SELECT * EXCLUDE (run_id) FROM train_log WHERE run_id = ? ORDER BY step", [run_id]
        ).fetchdf()

    def get_eval_summary(self, run_id: str) -> pd.DataFrame:
        """Mean metrics per split."""
        conn = self._ensure_connection()
        return conn.execute(
            """
            SELECT split, COUNT(*) AS frames, AVG(psnr) AS psnr, AVG(ssim) AS ssim, AVG(l1) AS l1
            FROM eval_metrics
            WHERE run_id = ?
            GROUP BY split
            ORDER BY split
            """,
            [run_id],
        ).fetchdf()

    def get_ablation_summary(self, run_id: str) -> pd.DataFrame:
        """Mean held-out metrics per variant over the seeds of an ablation run."""
        conn = self._ensure_connection()
        return conn.execute(
            """
            SELECT variant, COUNT(*) AS seeds, AVG(n_params) AS n_params,
                   AVG(psnr) AS psnr, AVG(ssim) AS ssim, AVG(l1) AS l1
            FROM ablation
            WHERE run_id = ?
            GROUP BY variant
            ORDER BY variant
            """,
            [run_id],
        ).fetchdf()

    def get_ablation_gap(self, run_id: str, variant: str, baseline: str) -> float:
        """Mean PSNR of ``variant`` minus that of ``baseline`` (NaN when either is missing)."""
        summary = self.get_ablation_summary(run_id).set_index("variant")
        if variant not in summary.index or baseline not in summary.index:
            return float("nan")
        return float(summary.loc[variant, "psnr"] - summary.loc[baseline, "psnr"])

    def close(self) -> None:
        if self.conn is not None:
            self.conn.close()
            self.conn = None

    def __enter__(self) -> "RunStore":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()
