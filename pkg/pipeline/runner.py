"""
Avatar Pipeline

Orchestrates the commands of the command-line interface: synthetic data
generation, training, reenactment rendering, evaluation and part
visualization. Every command writes its resolved configuration into its
output directory.
"""

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from core.config import ProjectConfig, config_manager
from core.data import (
    Dataset,
    RunStore,
    generate_synthetic,
    image_metrics,
    load_dataset,
    write_image,
)
from core.errors import AvatarError, DatasetError
from core.head_model import PoseExpr, PosedHead
from core.render import AvatarScene, Camera, RenderConfig, generate_rays, render_frame
from core.training import Trainer, TrainResult

RUN_DB = "runs.duckdb"
ABLATION_VARIANTS = ("part_based", "global_field")
ABLATION_SEEDS = 3

PART_PALETTE = np.array([
    [0.90, 0.30, 0.25],
    [0.95, 0.70, 0.20],
    [0.30, 0.70, 0.35],
    [0.25, 0.55, 0.90],
    [0.60, 0.35, 0.80],
    [0.95, 0.50, 0.75],
    [0.45, 0.80, 0.85],
])


def part_colors(probabilities: np.ndarray) -> np.ndarray:
    """``palette[argmax S] · max S`` for part probabilities [M, P]."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    best = np.argmax(probabilities, axis=1)
    return PART_PALETTE[best % len(PART_PALETTE)] * probabilities.max(axis=1, keepdims=True)


def load_sequence(path: str | Path, model_n_pose: int, model_n_expr: int) -> tuple[
    list[dict[str, Any]], dict[str, Any] | None
]:
    """
    Read a reenactment sequence.

    Accepts a JSON array of ``{theta, psi[, beta]}`` rows, or an object
    ``{"rows": [...], "camera": {...}}`` with an inline camera.

    Raises:
        FileNotFoundError: missing file
        DatasetError: malformed rows
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"sequence file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetError(f"{path} is not valid JSON: {e}") from e
    camera = None
    if isinstance(data, dict):
        camera = data.get("camera")
        data = data.get("rows")
    if not isinstance(data, list) or not data:
        raise DatasetError(f"{path}: expected a non-empty list of {{theta, psi}} rows")
    for i, row in enumerate(data):
        if not isinstance(row, dict) or "theta" not in row or "psi" not in row:
            raise DatasetError(f"{path}: row {i} needs 'theta' and 'psi'")
        if len(row["theta"]) != model_n_pose or len(row["psi"]) != model_n_expr:
            raise DatasetError(
                f"{path}: row {i} has {len(row['theta'])} pose and {len(row['psi'])} expression "
                f"values, the head model needs {model_n_pose} and {model_n_expr}"
            )
    return data, camera


class AvatarPipeline:
    """
    One configured pipeline run.

    Args:
        config: resolved project configuration
        out_dir: directory receiving outputs, the echoed config and the run store
    """

    def __init__(self, config: ProjectConfig, out_dir: str | Path):
        self.config = config
        self.out_dir = Path(out_dir)
        self.logger = self._setup_logging()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        config_manager.echo(config, self.out_dir)

    def _setup_logging(self) -> logging.Logger:
        """Set up logging configuration."""
        logging.basicConfig(
            level=getattr(logging, self.config.logging.level),
            format=self.config.logging.format,
            force=True,
        )
        return logging.getLogger(__name__)

    def _run_store(self) -> RunStore:
        return RunStore(self.out_dir / RUN_DB)

    # -- commands -------------------------------------------------------------

    def gen_synth(self) -> Dataset:
        return generate_synthetic(
            self.config.synthetic,
            self.out_dir,
            self.config.render,
            workers=self.config.workers,
            progress=self.config.train.progress,
        )

    def train(self, manifest: str | Path, resume: str | Path | None = None) -> TrainResult:
        dataset = load_dataset(manifest)
        if resume is not None:
            trainer = Trainer.from_checkpoint(dataset, resume, self.config)
        else:
            trainer = Trainer(dataset, self.config)
        with self._run_store() as store:
            run_id = store.start_run("train", self.config.to_dict(), trainer.deformer.get_name())
            result = trainer.fit(self.out_dir, run_store=store, run_id=run_id)
        if trainer.deformer.assigner_parameters():
            self.logger.info(f"Assigner agrees with hard labels on "
                             f"{trainer.distill_accuracy():.1%} of near-surface points")
        return result

    def _trainer(self, manifest: str | Path, checkpoint: str | Path) -> Trainer:
        return Trainer.from_checkpoint(load_dataset(manifest), checkpoint, self.config)

    def _scene(self, trainer: Trainer, pe: PoseExpr) -> AvatarScene:
        hard = self.config.train.schedule == "hard"
        posed = PosedHead(trainer.model, pe, self.config.head_model.knn)
        return AvatarScene(posed, trainer.deformer, trainer.canonical,
                           trainer.labeler if hard else None)

    def _render_config(self, camera: Camera) -> RenderConfig:
        return RenderConfig.from_settings(
            self.config.render, float(np.linalg.norm(camera.center)), stratified=False
        )

    def render(
        self,
        manifest: str | Path,
        checkpoint: str | Path,
        sequence: str | Path,
        frame: int = 0,
    ) -> list[Path]:
        """Render one PNG per sequence row (reenactment with unseen coefficients)."""
        trainer = self._trainer(manifest, checkpoint)
        model = trainer.model
        rows, inline_camera = load_sequence(sequence, model.n_pose, model.n_expr)
        if not 0 <= frame < len(trainer.dataset):
            raise DatasetError(f"camera frame {frame} is not in the dataset", frame)
        reference = trainer.dataset.frames[frame]
        camera = Camera.from_dict(inline_camera) if inline_camera else reference.camera
        cfg = self._render_config(camera)

        paths = []
        for i, row in enumerate(rows):
            beta = np.asarray(row.get("beta", reference.pe.beta), dtype=np.float64)
            try:
                pe = PoseExpr(beta, np.asarray(row["theta"]), np.asarray(row["psi"]))
                pe.check(model)
            except AvatarError as e:
                raise DatasetError(f"sequence row {i}: {e}") from e
            image = render_frame(camera, self._scene(trainer, pe), cfg,
                                 seed=self.config.seed, workers=self.config.workers).image
            paths.append(write_image(self.out_dir / f"render_{i:04d}.png", image))
            self.logger.info(f"Rendered sequence row {i}")
        return paths

    def _evaluate_frames(
        self, trainer: Trainer, indices: list[int], render_dir: Path | None = None
    ) -> pd.DataFrame:
        """Render frames with a trained model and score them against the ground truth."""
        dataset = trainer.dataset
        rows = []
        for index in indices:
            frame = dataset.frames[index]
            image = render_frame(frame.camera, self._scene(trainer, frame.pe),
                                 self._render_config(frame.camera), seed=self.config.seed,
                                 workers=self.config.workers).image
            rows.append({"frame": index, **image_metrics(image, frame.image)})
            if render_dir is not None:
                write_image(render_dir / f"{index:04d}.png", image)
            self.logger.info(f"Frame {index}: PSNR {rows[-1]['psnr']:.2f} dB")
        return pd.DataFrame(rows, columns=["frame", "psnr", "ssim", "l1"])

    def evaluate(
        self, manifest: str | Path, checkpoint: str | Path, split: str | None = None
    ) -> dict[str, Any]:
        """
        Render every frame of a split and compare with the ground truth.

        Writes ``metrics.json`` with per-frame rows and their mean.
        """
        split = split or self.config.eval.split
        trainer = self._trainer(manifest, checkpoint)
        render_dir = self.out_dir / "renders" if self.config.eval.save_renders else None
        metrics = self._evaluate_frames(trainer, trainer.dataset.split(split), render_dir)
        mean = {} if metrics.empty else {k: float(metrics[k].mean()) for k in ("psnr", "ssim", "l1")}
        report = {"split": split, "frames": metrics.to_dict(orient="records"), "mean": mean}
        (self.out_dir / "metrics.json").write_text(json.dumps(report, indent=2) + "\n")
        with self._run_store() as store:
            run_id = store.start_run("eval", self.config.to_dict(), trainer.deformer.get_name())
            store.log_eval(run_id, split, metrics)
        if mean:
            self.logger.info(f"{split}: PSNR {mean['psnr']:.2f} dB, SSIM {mean['ssim']:.4f}, "
                             f"L1 {mean['l1']:.4f}")
        return report

    def viz_parts(self, manifest: str | Path, checkpoint: str | Path, frame: int = 0) -> Path:
        """
        Color surface points by their most probable part, darkened by that
        probability; rays without a surface show the background.
        """
        trainer = self._trainer(manifest, checkpoint)
        if not 0 <= frame < len(trainer.dataset):
            raise DatasetError(f"frame {frame} is not in the dataset", frame)
        target = trainer.dataset.frames[frame]
        camera = target.camera
        scene = self._scene(trainer, target.pe)
        rendered = render_frame(camera, scene, self._render_config(camera),
                                seed=self.config.seed, workers=self.config.workers)

        background = np.asarray(self.config.render.background)
        image = np.broadcast_to(background, rendered.image.shape).copy()
        hit = rendered.hit.reshape(-1)
        if hit.any():
            origins, directions = generate_rays(camera, camera.pixel_grid()[hit])
            points = origins + rendered.depth.reshape(-1)[hit, None] * directions
            coarse = scene.posed.inverse(points, strict=False).points
            if self.config.train.schedule == "hard" or not trainer.deformer.assigner_parameters():
                labels = trainer.labeler(coarse)
                probabilities = np.eye(trainer.model.n_parts)[labels]
            else:
                probabilities = trainer.deformer.assign_parts(coarse, target.pe.condition).data
            image.reshape(-1, 3)[hit] = part_colors(probabilities)
        path = write_image(self.out_dir / f"parts_{frame:04d}.png", image)
        self.logger.info(f"Part visualization of frame {frame}: {int(hit.sum())} surface pixels")
        return path

    # -- ablation -------------------------------------------------------------

    def variant_config(self, variant: str, seed: int) -> ProjectConfig:
        """
        The run's configuration with another deformer variant and seed.

        Network sizes carry over, so a baseline with ``width: null`` is
        widened to the part-based parameter count.
        """
        data = self.config.to_dict()
        data["seed"] = seed
        data["deformer"] = {**data["deformer"], "variant": variant, "width": None}
        return config_manager.resolve(data, use_env=False)

    def ablate(
        self,
        manifest: str | Path,
        seeds: list[int] | None = None,
        variants: tuple[str, ...] = ABLATION_VARIANTS,
    ) -> dict[str, Any]:
        """
        Train every variant once per seed and compare them on the held-out split.

        Writes ``ablation.json`` with one row per trained model, the mean
        per variant and the PSNR gap of the first variant over each other
        one; the rows also go to the run store.
        """
        dataset = load_dataset(manifest)
        seeds = list(seeds) if seeds else [self.config.seed + i for i in range(ABLATION_SEEDS)]
        split = self.config.eval.split
        indices = dataset.split(split)
        if not indices:
            raise DatasetError(f"the {split} split is empty; nothing to compare")

        rows = []
        for variant in variants:
            for seed in seeds:
                config = self.variant_config(variant, seed)
                trainer = Trainer(dataset, config)
                n_params = sum(p.size for p in trainer.deformer.named_parameters().values())
                self.logger.info(f"Ablation: {variant} seed {seed} ({n_params} deformer parameters)")
                trainer.fit(self.out_dir / variant / f"seed_{seed}")
                metrics = self._evaluate_frames(trainer, indices)
                rows.append({
                    "variant": variant,
                    "seed": seed,
                    "n_params": n_params,
                    **{k: float(metrics[k].mean()) for k in ("psnr", "ssim", "l1")},
                })

        results = pd.DataFrame(rows)
        with self._run_store() as store:
            run_id = store.start_run("ablate", self.config.to_dict(), ",".join(variants))
            store.log_ablation(run_id, results)
        mean = results.groupby("variant", sort=False)[["n_params", "psnr", "ssim", "l1"]].mean()
        reference = variants[0]
        gaps = {
            other: float(mean.loc[reference, "psnr"] - mean.loc[other, "psnr"])
            for other in variants[1:]
        }
        report = {
            "split": split,
            "seeds": seeds,
            "runs": results.to_dict(orient="records"),
            "mean": {v: {k: float(x) for k, x in mean.loc[v].items()} for v in variants},
            "psnr_gap": gaps,
        }
        (self.out_dir / "ablation.json").write_text(json.dumps(report, indent=2) + "\n")
        for other, gap in gaps.items():
            self.logger.info(f"{reference} vs {other}: held-out PSNR gap {gap:+.2f} dB")
        return report
