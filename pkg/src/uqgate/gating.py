"""Variance gating: attenuate class probabilities by their ensemble SNR.

The gate for class c of sample n is

    gamma[n, c] = 1 - exp(-mu[n, c] / (k * sigma[n, c] + epsilon))

computed once from the ensemble mean/std and shared across all members.
Each member row is multiplied by the gates and renormalized, which shifts
mass away from classes the ensemble disagrees on. The gated total/aleatoric/
epistemic decomposition is the usual entropy split applied to the gated
member rows, with the gated predictive distribution defined as the
arithmetic mean of the renormalized gated members (this makes the epistemic
term non-negative by entropy concavity).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .ept import EptValidationError, PredictionTensor
from .stats import entropy, member_probs

# A member row whose entire gated mass falls below this is degenerate and
# falls back to the ungated row (reachable only with astronomical k).
DEGENERATE_MASS = 1e-300


@dataclass(frozen=True)
class GateConfig:
    """Gate sensitivity k (> 0) and numerical-stability epsilon (> 0)."""

    k: float
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


class Decomposition(NamedTuple):
    """Per-sample total, aleatoric, and epistemic uncertainty in nats."""

    tu: np.ndarray
    au: np.ndarray
    eu: np.ndarray


@dataclass(frozen=True)
class GatedEnsemble:
    """Gates, renormalized gated member rows, and their predictive mean.

    fallback flags samples where at least one member row lost all gated
    mass and was restored ungated.
    """

    gates: np.ndarray       # (N, C) in [0, 1)
    members: np.ndarray     # (M, N, C), each row sums to 1
    predictive: np.ndarray  # (N, C) mean of gated member rows
    fallback: np.ndarray = field(repr=False)  # (N,) bool


def gate(mu: np.ndarray, sigma: np.ndarray, cfg: GateConfig) -> np.ndarray:
    """Variance gate values, elementwise in [0, 1)."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    return 1.0 - np.exp(-mu / (cfg.k * sigma + cfg.epsilon))


def gated_members(tensor: PredictionTensor, cfg: GateConfig) -> GatedEnsemble:
    """Gate and renormalize every member row of a multiclass probs tensor."""
    if tensor.manifest.task != "multiclass":
        raise EptValidationError("variance gating is defined for multiclass tensors only")
    probs = member_probs(tensor)
    gates = gate(probs.mean(axis=0), probs.std(axis=0), cfg)

    weighted = probs * gates[None, :, :]
    mass = weighted.sum(axis=2, keepdims=True)
    degenerate = mass[..., 0] <= DEGENERATE_MASS  # (M, N)
    if degenerate.any():
        # Restore the raw rows rather than emitting NaN or uniform noise.
        weighted = np.where(degenerate[:, :, None], probs, weighted)
        mass = weighted.sum(axis=2, keepdims=True)
    members = weighted / mass
    return GatedEnsemble(
        gates=gates,
        members=members,
        predictive=members.mean(axis=0),
        fallback=degenerate.any(axis=0),
    )


def gated_decomposition(tensor: PredictionTensor, cfg: GateConfig) -> Decomposition:
    """Gated TU/AU/EU per sample.

    TU is the entropy of the gated predictive mean, AU the mean entropy of
    the gated member rows, EU their difference (>= 0 up to rounding).
    """
    gated = gated_members(tensor, cfg)
    tu = entropy(gated.predictive)
    au = entropy(gated.members).mean(axis=0)
    return Decomposition(tu=tu, au=au, eu=tu - au)
