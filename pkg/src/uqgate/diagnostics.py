"""Diversity timelines, collapse detection, selective prediction, OOD, ECE.

Ensemble diversity is summarized as the global mean of the per-class
standard deviations: permutation-invariant, O(NC), and exactly zero when
every member coincides. A committee has collapsed once this scalar drops
below a threshold tau, after which every disagreement-based measure (EU,
EPKL, EPJS) vanishes and the gate sensitivity k stops mattering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .ept import EptValidationError, PredictionTensor
from .margin import DEFAULT_EPS, UNCERTAIN, decide_multiclass
from .stats import ClassStats, ensemble_std


@dataclass(frozen=True)
class DiversitySeries:
    """Per-epoch diversity values and the first epoch below tau (if any)."""

    epochs: np.ndarray
    values: np.ndarray
    tau: float
    collapse_epoch: int | None


@dataclass(frozen=True)
class CoverageRiskCurve:
    """Coverage and selective risk per gate sensitivity k.

    risk is NaN at k values where nothing is decided (never silently 0).
    """

    k: np.ndarray
    coverage: np.ndarray
    risk: np.ndarray


def diversity(tensor: PredictionTensor) -> float:
    """Mean ensemble standard deviation over all samples and classes."""
    return float(ensemble_std(tensor).mean())


def collapse_epoch(
    snapshots: Sequence[PredictionTensor], tau: float = 1e-3
) -> DiversitySeries:
    """Diversity per snapshot plus the first epoch with diversity < tau.

    Epochs come from the manifests (falling back to list position) and must
    be strictly increasing; all snapshots must share (N, C).
    """
    if not snapshots:
        raise ValueError("need at least one snapshot")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    shape = (snapshots[0].manifest.samples, snapshots[0].manifest.classes)
    epochs = []
    values = []
    for position, tensor in enumerate(snapshots):
        if (tensor.manifest.samples, tensor.manifest.classes) != shape:
            raise EptValidationError(
                f"snapshot {position} has shape "
                f"{(tensor.manifest.samples, tensor.manifest.classes)}, expected {shape}"
            )
        epoch = tensor.manifest.epoch
        epochs.append(position if epoch is None else epoch)
        values.append(diversity(tensor))
    epochs = np.asarray(epochs, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if len(epochs) > 1 and not (np.diff(epochs) > 0).all():
        raise ValueError("epochs must be strictly increasing")
    below = np.flatnonzero(values < tau)
    collapsed = int(epochs[below[0]]) if below.size else None
    return DiversitySeries(epochs=epochs, values=values, tau=tau, collapse_epoch=collapsed)


def coverage_risk(
    stats: ClassStats,
    labels: np.ndarray,
    k_grid: Sequence[float],
    eps: float = DEFAULT_EPS,
) -> CoverageRiskCurve:
    """Coverage (fraction decided) and risk (error rate among decided) per k."""
    labels = np.asarray(labels)
    if labels.shape != (stats.samples,):
        raise ValueError(
            f"labels shape {labels.shape} does not match {stats.samples} samples"
        )
    ks = np.asarray(list(k_grid), dtype=np.float64)
    coverage = np.empty(ks.shape)
    risk = np.empty(ks.shape)
    for idx, k in enumerate(ks):
        decisions = decide_multiclass(stats, k=float(k), eps=eps)
        decided = decisions.decision != UNCERTAIN
        coverage[idx] = decided.mean()
        if decided.any():
            risk[idx] = (decisions.decision[decided] != labels[decided]).mean()
        else:
            risk[idx] = np.nan
    return CoverageRiskCurve(k=ks, coverage=coverage, risk=risk)


def auroc(scores_negative: np.ndarray, scores_positive: np.ndarray) -> float:
    """Probability a positive outscores a negative, ties at 1/2 (Mann-Whitney).

    Midrank tie handling makes this exact, not an approximation.
    """
    neg = np.asarray(scores_negative, dtype=np.float64).ravel()
    pos = np.asarray(scores_positive, dtype=np.float64).ravel()
    if neg.size == 0 or pos.size == 0:
        raise ValueError("both score lists must be non-empty")
    if not (np.isfinite(neg).all() and np.isfinite(pos).all()):
        raise ValueError("scores must be finite")
    ranks = rankdata(np.concatenate([neg, pos]), method="average")
    u = ranks[neg.size:].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (neg.size * pos.size))


def ece(mean_probs: np.ndarray, labels: np.ndarray, bins: int = 15) -> float:
    """Expected calibration error with equal-width bins on max probability."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    probs = np.asarray(mean_probs, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape != (probs.shape[0],):
        raise ValueError(
            f"labels shape {labels.shape} does not match {probs.shape[0]} samples"
        )
    confidence = probs.max(axis=1)
    correct = probs.argmax(axis=1) == labels
    indices = np.minimum((confidence * bins).astype(np.int64), bins - 1)
    total = 0.0
    for b in range(bins):
        in_bin = indices == b
        count = in_bin.sum()
        if count == 0:
            continue
        gap = abs(correct[in_bin].mean() - confidence[in_bin].mean())
        total += (count / probs.shape[0]) * gap
    return float(total)
