"""Training stages and the learning-rate schedule."""

from enum import Enum

from core.config.schema import TrainSettings


class Stage(str, Enum):
    """
    STAGE1 trains the canonical field and local nets with hard part
    labels, DISTILL fits the assigner to those labels, STAGE2 trains
    everything with the soft assignment.
    """

    STAGE1 = "stage1"
    DISTILL = "distill"
    STAGE2 = "stage2"


def learning_rate(step: int, cfg: TrainSettings) -> float:
    """Exponential decay from ``lr_start`` at step 0 to ``lr_end`` at ``total_steps``."""
    progress = min(max(step / cfg.total_steps, 0.0), 1.0)
    return cfg.lr_start * (cfg.lr_end / cfg.lr_start) ** progress


def stage1_steps(cfg: TrainSettings) -> int:
    return int(round(cfg.stage1_fraction * cfg.total_steps))


def stage_of(step: int, cfg: TrainSettings) -> Stage:
    if cfg.schedule == "hard":
        return Stage.STAGE1
    if cfg.schedule == "joint":
        return Stage.STAGE2
    first = stage1_steps(cfg)
    if step < first:
        return Stage.STAGE1
    if step < first + cfg.distill_steps:
        return Stage.DISTILL
    return Stage.STAGE2
