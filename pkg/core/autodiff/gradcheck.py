"""
Gradient Check

Compares tape gradients with central finite differences. Runs in 64-bit
storage precision; entries sitting on a kink (where one-sided differences
do not shrink with the step) are reported as excluded instead of failing.
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .tape import Tape
from .tensor import Tensor, precision

logger = logging.getLogger(__name__)


@dataclass
class GradientCheckReport:
    """Outcome of a gradient check."""

    max_rel_error: float
    n_checked: int
    excluded: list[tuple[int, tuple[int, ...]]] = field(default_factory=list)
    worst: tuple[int, tuple[int, ...]] | None = None

    @property
    def n_excluded(self) -> int:
        return len(self.excluded)


def _evaluate(f: Callable[[], Tensor]) -> float:
    return float(np.asarray(f().data, dtype=np.float64).reshape(-1)[0])


def gradient_check(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-4,
    atol: float = 1e-6,
    max_entries_per_param: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradientCheckReport:
    """
    Check the tape gradient of a scalar function against central differences.

    The relative error of an entry is ``|analytic - numeric| /
    max(|analytic|, |numeric|, atol)``.

    Args:
        f: deterministic closure computing a scalar loss from ``params``
        params: tensors to differentiate; promoted to 64-bit for the check
            and restored afterwards
        h: finite-difference step
        atol: floor of the relative-error denominator
        max_entries_per_param: check a random subset of entries per tensor
        rng: generator for the subset choice

    Returns:
        GradientCheckReport with the maximum relative error over checked entries
    """
    rng = rng or np.random.default_rng(0)
    originals = [p.data for p in params]
    try:
        with precision(np.float64):
            for p in params:
                p.data = np.asarray(p.data, dtype=np.float64).copy()
            with Tape() as tape:
                loss = f()
            grads = tape.backward(loss, params)
            center = _evaluate(f)

            worst_error = 0.0
            worst: tuple[int, tuple[int, ...]] | None = None
            excluded: list[tuple[int, tuple[int, ...]]] = []
            checked = 0
            for param_index, p in enumerate(params):
                flat_indices = np.arange(p.size)
                if max_entries_per_param is not None and p.size > max_entries_per_param:
                    flat_indices = np.sort(
                        rng.choice(p.size, size=max_entries_per_param, replace=False)
                    )
                analytic = grads[p].reshape(-1)
                view = p.data.reshape(-1)
                for flat in flat_indices:
                    base = view[flat]
                    values = {}
                    for step in (h, -h, h / 2, -h / 2):
                        view[flat] = base + step
                        values[step] = _evaluate(f)
                    view[flat] = base
                    numeric = (values[h] - values[-h]) / (2 * h)

                    one_sided_gap = abs((values[h] - center) - (center - values[-h])) / h
                    half_gap = (
                        abs((values[h / 2] - center) - (center - values[-h / 2])) / (h / 2)
                    )
                    index = tuple(int(i) for i in np.unravel_index(flat, p.shape))
                    if one_sided_gap > 1e-3 and half_gap > 0.75 * one_sided_gap:
                        excluded.append((param_index, index))
                        continue

                    denom = max(abs(analytic[flat]), abs(numeric), atol)
                    error = abs(analytic[flat] - numeric) / denom
                    checked += 1
                    if error > worst_error:
                        worst_error = error
                        worst = (param_index, index)
    finally:
        for p, original in zip(params, originals, strict=True):
            p.data = original

    if excluded:
        logger.debug(f"Gradient check excluded {len(excluded)} non-smooth entries")
    return GradientCheckReport(worst_error, checked, excluded, worst)
