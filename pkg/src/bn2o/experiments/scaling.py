"""
Cost of aggregated inference against the size of the reduced state space.

Each policy's reduced table (N_b base states plus the aggregate state) is
evaluated on the same batch of evidence sets; the best of `repeats` timings
is regressed on N_b + 1.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy import stats

from ..core.network import Bn2oNetwork, Evidence
from ..errors import InvalidInputError
from ..reduction.aggregation import build_aggregated_model
from ..reduction.base_states import select_base_states

logger = logging.getLogger(__name__)


@dataclass
class ScalingPoint:
    policy: str
    n_states: int
    seconds: float


@dataclass
class ScalingReport:
    points: List[ScalingPoint]
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self):
        return {
            "points": [p.__dict__ for p in self.points],
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
        }


def _evidence_masks(net: Bn2oNetwork, evidence: Sequence[Evidence]):
    positive = np.zeros((len(evidence), net.n_findings), dtype=bool)
    negative = np.zeros_like(positive)
    for r, ev in enumerate(evidence):
        ev.validate_for(net)
        positive[r, ev.sorted_positive()] = True
        negative[r, ev.sorted_negative()] = True
    return positive, negative


def inference_scaling(
    net: Bn2oNetwork,
    policies: Sequence,
    evidence: Sequence[Evidence],
    repeats: int = 5,
) -> ScalingReport:
    if len(policies) < 2:
        raise InvalidInputError("scaling needs at least two policies")
    if not evidence:
        raise InvalidInputError("scaling needs at least one evidence set")
    positive, negative = _evidence_masks(net, evidence)

    points = []
    for policy in policies:
        table = build_aggregated_model(net, select_base_states(net, policy)).table(True)
        table.batch(positive[:1], negative[:1])  # builds the cached log terms outside the timing
        best = float("inf")
        for _ in range(max(repeats, 1)):
            t0 = time.perf_counter()
            table.batch(positive, negative)
            best = min(best, time.perf_counter() - t0)
        points.append(ScalingPoint(policy.descriptor, table.size, best))
        logger.info("%s: %d states, %.3f ms per batch", policy.descriptor, table.size, best * 1e3)

    fit = stats.linregress([p.n_states for p in points], [p.seconds for p in points])
    return ScalingReport(points, float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2))
