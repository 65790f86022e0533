"""
Avatar Trainer

Optimizes the fine deformer and the canonical field against a dataset
with a photometric loss and a normal-consistency regularizer, following
a staged schedule (hard labels, assigner distillation, soft assignment).

Every source of randomness is derived from ``(seed, step, job)``, so a
run resumed from a checkpoint continues bit-exactly and the result does
not depend on the number of worker threads.
"""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from tqdm import tqdm

from core.autodiff import Tape, Tensor, prefixed
from core.config.schema import ProjectConfig
from core.data import (
    Dataset,
    RunStore,
    load_checkpoint,
    restore_checkpoint,
    save_checkpoint,
)
from core.errors import NonFiniteError, NonFiniteLossError
from core.fields import CanonicalField, PartLabeler
from core.head_model import PosedHead, canonical_vertices
from core.interfaces.deformer import Deformer
from core.registry import registry
from core.render import AvatarScene, RenderConfig, render_rays

from .losses import cross_entropy, normal_reg_loss, photometric_loss
from .optimizer import Adam
from .sampler import RayItem, sample_ray_batch
from .schedule import Stage, learning_rate, stage_of

logger = logging.getLogger(__name__)

LOG_NAME = "train_log.jsonl"
CHECKPOINT_NAME = "checkpoint.bin"


@dataclass
class ChunkResult:
    loss: float
    grads: dict[str, np.ndarray] = field(repr=False)
    surface: np.ndarray = field(repr=False)


@dataclass
class TrainResult:
    steps: int
    final_loss: float
    checkpoint: Path | None
    log_path: Path | None


def build_deformer(config: ProjectConfig, cond_dim: int, rng: np.random.Generator) -> Deformer:
    settings = config.deformer.model_dump()
    return registry.create_deformer(settings.pop("variant"), settings, cond_dim, rng)


class Trainer:
    """
    Training loop over a dataset.

    Parameters are addressed as ``deformer.<name>`` and ``canonical.<name>``
    in the optimizer and in checkpoints.
    """

    def __init__(
        self,
        dataset: Dataset,
        config: ProjectConfig,
        deformer: Deformer | None = None,
        canonical: CanonicalField | None = None,
    ):
        self.dataset = dataset
        self.config = config
        self.model = dataset.head_model
        self.canon = dataset.canonical
        rng = np.random.default_rng(config.seed)
        cond_dim = self.model.n_pose + self.model.n_expr
        self.deformer = deformer or build_deformer(config, cond_dim, rng)
        self.canonical = canonical or CanonicalField.from_config(config.canonical.model_dump(), rng)
        self.labeler = PartLabeler(self.model, self.canon)
        self.params = self.named_parameters()
        self.optimizer = Adam(self.params)
        self.step = 0
        self._posed: dict[int, PosedHead] = {}
        self._canonical_vertices = canonical_vertices(self.model, self.canon)

    @classmethod
    def from_checkpoint(
        cls, dataset: Dataset, path: str | Path, config: ProjectConfig | None = None
    ) -> "Trainer":
        """
        Rebuild a trainer (parameters, optimizer state, step) from a checkpoint.

        Args:
            config: configuration to continue with; defaults to the one
                stored in the checkpoint

        Raises:
            ShapeMismatchError: the configuration builds differently shaped networks
        """
        checkpoint = load_checkpoint(path)
        config = config or ProjectConfig.model_validate(checkpoint.config)
        trainer = cls(dataset, config)
        restore_checkpoint(checkpoint, trainer.deformer, trainer.canonical, trainer.optimizer)
        trainer.step = checkpoint.step
        logger.info(f"Restored checkpoint {path} at step {checkpoint.step}")
        return trainer

    # -- parameters -----------------------------------------------------------

    def named_parameters(self) -> dict[str, Tensor]:
        return {
            **prefixed("deformer", self.deformer.named_parameters()),
            **prefixed("canonical", self.canonical.named_parameters()),
        }

    def effective_stage(self, step: int) -> Stage:
        """Scheduled stage; variants without an assigner skip distillation."""
        stage = stage_of(step, self.config.train)
        if stage is Stage.DISTILL and not self.deformer.assigner_parameters():
            return Stage.STAGE2
        return stage

    def trainable(self, stage: Stage) -> list[str]:
        assigner = set(prefixed("deformer", self.deformer.assigner_parameters()))
        if stage is Stage.DISTILL:
            return sorted(assigner)
        if stage is Stage.STAGE1:
            return [name for name in self.params if name not in assigner]
        return list(self.params)

    def posed(self, frame_index: int) -> PosedHead:
        if frame_index not in self._posed:
            frame = self.dataset.frames[frame_index]
            self._posed[frame_index] = PosedHead(self.model, frame.pe, self.config.head_model.knn)
        return self._posed[frame_index]

    def render_config(self, frame_index: int) -> RenderConfig:
        camera = self.dataset.frames[frame_index].camera
        return RenderConfig.from_settings(self.config.render, float(np.linalg.norm(camera.center)))

    # -- one step -------------------------------------------------------------

    def _chunk_jobs(self, items: list[RayItem]) -> list[tuple[int, slice, np.ndarray]]:
        jobs = []
        per_item = self.config.train.rays_per_item
        chunk = self.config.train.ray_chunk
        for i, item in enumerate(items):
            for start in range(0, len(item), chunk):
                sl = slice(start, min(start + chunk, len(item)))
                jobs.append((i, sl, i * per_item + np.arange(sl.start, sl.stop)))
        return jobs

    def _run_chunk(
        self, step: int, job: int, item: RayItem, sl: slice, ray_ids: np.ndarray,
        hard: bool, normalizer: float,
    ) -> ChunkResult:
        rng = np.random.default_rng([self.config.seed, step, job])
        scene = AvatarScene(
            self.posed(item.frame_index),
            self.deformer,
            self.canonical,
            self.labeler if hard else None,
        )
        try:
            with Tape() as tape:
                batch = render_rays(scene, item.origins[sl], item.directions[sl],
                                    self.render_config(item.frame_index), rng)
                loss = photometric_loss(batch.rgb, item.colors[sl], normalizer)
            grads = tape.backward(loss, list(self.params.values()))
        except NonFiniteError as e:
            raise NonFiniteLossError(step, ray_ids, str(e)) from e
        hits = batch.surface()
        surface = hits.interpolate(batch.canonical)
        return ChunkResult(loss.item(), {n: grads[p] for n, p in self.params.items()}, surface)

    def train_step(self, step: int) -> dict[str, Any]:
        """
        One optimization step.

        Returns:
            Log record with the step's stage, learning rate and losses

        Raises:
            NonFiniteLossError: a NaN/Inf appeared in the losses or gradients
        """
        started = time.perf_counter()
        stage = self.effective_stage(step)
        lr = learning_rate(step, self.config.train)
        if stage is Stage.DISTILL:
            loss = self.assigner_distill_step(step, lr)
            return {
                "step": step, "stage": stage.value, "lr": lr, "loss_photo": None,
                "loss_normal": None, "loss_distill": loss, "loss_total": loss, "n_surface": 0,
                "wall_ms": (time.perf_counter() - started) * 1e3,
            }

        cfg = self.config.train
        rng = np.random.default_rng([self.config.seed, step])
        items = sample_ray_batch(self.dataset, cfg, rng)
        for item in items:
            self.posed(item.frame_index)
        jobs = self._chunk_jobs(items)
        normalizer = float(sum(len(item) for item in items))
        hard = stage is Stage.STAGE1

        def run(job: int) -> ChunkResult:
            i, sl, ray_ids = jobs[job]
            return self._run_chunk(step, job, items[i], sl, ray_ids, hard, normalizer)

        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                results = list(pool.map(run, range(len(jobs))))
        else:
            results = [run(j) for j in range(len(jobs))]

        grads = {name: np.zeros(p.shape) for name, p in self.params.items()}
        for result in results:
            for name, g in result.grads.items():
                grads[name] += g
        loss_photo = float(sum(r.loss for r in results))

        surface = np.concatenate([r.surface for r in results]) if results else np.empty((0, 3))
        loss_normal = 0.0
        if cfg.lambda_ > 0 and len(surface):
            canonical_params = prefixed("canonical", self.canonical.named_parameters())
            try:
                with Tape() as tape:
                    reg = normal_reg_loss(self.canonical, surface, cfg.eps_radius, rng,
                                          normalizer=len(surface))
                    weighted = reg * cfg.lambda_
                reg_grads = tape.backward(weighted, list(canonical_params.values()))
            except NonFiniteError as e:
                raise NonFiniteLossError(step, np.arange(int(normalizer)), str(e)) from e
            for name, p in canonical_params.items():
                grads[name] += reg_grads[p]
            loss_normal = reg.item()

        loss_total = loss_photo + cfg.lambda_ * loss_normal
        if not np.isfinite(loss_total):
            raise NonFiniteLossError(step, np.arange(int(normalizer)), "total loss")
        try:
            self.optimizer.step(grads, lr, self.trainable(stage))
        except NonFiniteError as e:
            raise NonFiniteLossError(step, np.arange(int(normalizer)), str(e)) from e

        return {
            "step": step,
            "stage": stage.value,
            "lr": lr,
            "loss_photo": loss_photo,
            "loss_normal": loss_normal,
            "loss_distill": None,
            "loss_total": loss_total,
            "n_surface": int(len(surface)),
            "wall_ms": (time.perf_counter() - started) * 1e3,
        }

    # -- assigner distillation ------------------------------------------------

    def distill_batch(self, rng: np.random.Generator, n_points: int | None = None) -> tuple[
        np.ndarray, np.ndarray, np.ndarray
    ]:
        """
        Near-surface canonical points, their nearest-vertex part labels and
        the condition of a random training frame for each point.
        """
        cfg = self.config.train
        n = n_points or cfg.distill_points
        verts = self._canonical_vertices
        points = verts[rng.integers(0, len(verts), n)] + rng.normal(0.0, cfg.distill_sigma, (n, 3))
        labels = self.labeler(points)
        frames = rng.choice(np.asarray(self.dataset.train_idx), n, replace=True)
        conditions = np.stack([self.dataset.frames[int(f)].pe.condition for f in frames])
        return points, labels, conditions

    def assigner_distill_step(self, step: int, lr: float) -> float:
        """Fit the assigner to hard part labels; only assigner weights change."""
        rng = np.random.default_rng([self.config.seed, step])
        points, labels, conditions = self.distill_batch(rng)
        assigner = prefixed("deformer", self.deformer.assigner_parameters())
        try:
            with Tape() as tape:
                loss = cross_entropy(self.deformer.part_logits(points, conditions), labels)
            grads = tape.backward(loss, list(assigner.values()))
            self.optimizer.step({n: grads[p] for n, p in assigner.items()}, lr, list(assigner))
        except NonFiniteError as e:
            raise NonFiniteLossError(step, np.arange(len(points)), str(e)) from e
        return loss.item()

    def distill_accuracy(self, n_points: int = 2048, seed: int = 0) -> float:
        """Fraction of near-surface points whose argmax part equals the hard label."""
        points, labels, conditions = self.distill_batch(np.random.default_rng(seed), n_points)
        scores = self.deformer.assign_parts(points, conditions).data
        return float(np.mean(np.argmax(scores, axis=1) == labels))

    # -- loop -----------------------------------------------------------------

    def save(self, path: str | Path) -> Path:
        return save_checkpoint(
            path,
            self.step,
            self.config.to_dict(),
            self.deformer,
            self.canonical,
            self.optimizer,
            variant=self.deformer.get_name(),
        )

    def fit(
        self,
        out_dir: str | Path | None = None,
        total_steps: int | None = None,
        run_store: RunStore | None = None,
        run_id: str | None = None,
    ) -> TrainResult:
        """
        Train from the current step up to ``total_steps``.

        Writes ``train_log.jsonl`` (appended when resuming), periodic
        checkpoints under ``checkpoints/`` and a final ``checkpoint.bin``.
        """
        cfg = self.config.train
        total = total_steps if total_steps is not None else cfg.total_steps
        out = Path(out_dir) if out_dir is not None else None
        log_path = out / LOG_NAME if out is not None else None
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            if self.step == 0 and log_path.exists():
                log_path.unlink()

        logger.info(f"Training {self.deformer.get_name()} from step {self.step} to {total} "
                    f"({self.config.workers} workers)")
        last_loss = float("nan")
        progress = tqdm(range(self.step, total), desc="Training", disable=not cfg.progress,
                        initial=self.step, total=total)
        for step in progress:
            try:
                record = self.train_step(step)
            except NonFiniteLossError:
                logger.error(f"Non-finite loss at step {step}; aborting")
                raise
            self.step = step + 1
            last_loss = record["loss_total"]
            progress.set_postfix(stage=record["stage"], loss=f"{last_loss:.4f}")
            if log_path is not None:
                with log_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record) + "\n")
            if run_store is not None and run_id is not None:
                run_store.log_steps(run_id, [record])
            if out is not None and cfg.checkpoint_every and self.step % cfg.checkpoint_every == 0:
                self.save(out / "checkpoints" / f"step_{self.step:06d}.bin")

        checkpoint = self.save(out / CHECKPOINT_NAME) if out is not None else None
        logger.info(f"Finished at step {self.step} (loss {last_loss:.5f})")
        return TrainResult(self.step, last_loss, checkpoint, log_path)
