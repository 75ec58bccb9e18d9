from .inference import (
    brute_force_posteriors,
    exact_posteriors,
    finding_marginals,
    negative_evidence_posteriors,
    prior_finding_marginal,
    quickscore_posteriors,
)
from .network import Bn2oNetwork, Evidence, Posteriors

__all__ = [
    "Bn2oNetwork",
    "Evidence",
    "Posteriors",
    "brute_force_posteriors",
    "exact_posteriors",
    "finding_marginals",
    "negative_evidence_posteriors",
    "prior_finding_marginal",
    "quickscore_posteriors",
]
