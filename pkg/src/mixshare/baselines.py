"""Comparison learners: projected online gradient descent and the
no-fixed-share (mu = 0) exponential-weights ablation."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .core import DomainSpec, LossSpec
from . import ensemble


class StepSchedule(Enum):
    CONSTANT = "constant"
    INVERSE_T = "inverse_t"


@dataclass(frozen=True)
class OgdState:
    w: np.ndarray
    domain: DomainSpec
    schedule: StepSchedule
    step_param: float
    round: int = 1

    def step_size(self) -> float:
        if self.schedule == StepSchedule.CONSTANT:
            return self.step_param
        return self.step_param / self.round


def init_ogd(domain: DomainSpec, schedule: StepSchedule, step_param: float) -> OgdState:
    return OgdState(w=domain.center.copy(), domain=domain, schedule=schedule, step_param=step_param)


def ogd_step(s: OgdState, g: np.ndarray) -> OgdState:
    """w' = project(w - eta_t g); the iterate never leaves the domain."""
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    w = s.domain.project(s.w - s.step_size() * g)
    return replace(s, w=w, round=s.round + 1)


def static_ew(spec: LossSpec, domain: DomainSpec, horizon: int) -> ensemble.EnsembleState:
    """The mu = 0 ablation of the fixed-share ensemble: a single base
    learner for the whole stream, same code path as the full ensemble."""
    return ensemble.init(spec, domain, horizon, mu=0.0)
