"""SNR prediction rules and variance-gated margin uncertainty (GMU).

Multiclass: the margin between the top-2 class means, scaled by their
combined spread, drives both an abstention rule and the gated score

    GMU = 1 - mu(i) * (1 - exp(-(mu(i) - mu(j)) / (sigma(i) + sigma(j) + eps)))

Multilabel: each label is a two-way decision against its complement, with
mu(i) = max(u, 1 - u) folding the raw mean u; the complement inherits the
same sigma, so the margin is 2 mu(i) - 1 over spread 2 sigma.

Decisions are integer codes: the predicted class index when the rule fires,
UNCERTAIN (-1) otherwise; multilabel uses PRESENT / ABSENT / UNCERTAIN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stats import ClassStats

DEFAULT_EPS = 1e-8

UNCERTAIN = -1
ABSENT = 0
PRESENT = 1


@dataclass(frozen=True)
class MulticlassDecisions:
    """Vectorized per-sample rule output.

    decision holds the top-1 class index where the rule fires and
    UNCERTAIN (-1) elsewhere. snr is non-negative (ties give 0); it is
    +inf only in the eps=0, zero-spread, positive-margin corner.
    """

    top1: np.ndarray
    top2: np.ndarray
    snr: np.ndarray
    decision: np.ndarray


def top2(mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the two largest class means per sample; ties break low.

    Accepts a single row (C,) or a batch (N, C); returns scalars or arrays.
    """
    mu = np.asarray(mu, dtype=np.float64)
    single = mu.ndim == 1
    rows = mu[None, :] if single else mu
    if rows.shape[1] < 2:
        raise ValueError("top2 requires at least 2 classes")
    order = np.argsort(-rows, axis=1, kind="stable")
    i, j = order[:, 0], order[:, 1]
    if single:
        return int(i[0]), int(j[0])
    return i, j


def _snr(margin: np.ndarray, spread: np.ndarray, eps: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = margin / (spread + eps)
    # 0/0 (tied means, zero spread, eps=0) counts as no signal.
    return np.where(np.isnan(snr), 0.0, snr)


def decide_multiclass(
    stats: ClassStats, k: float, eps: float = DEFAULT_EPS
) -> MulticlassDecisions:
    """Apply the margin rule: predict top-1 iff mu(i) - k sigma(i) > mu(j) + k sigma(j)."""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    rows = np.arange(stats.samples)
    i, j = top2(stats.mu)
    mu_i, mu_j = stats.mu[rows, i], stats.mu[rows, j]
    sig_i, sig_j = stats.sigma[rows, i], stats.sigma[rows, j]
    snr = _snr(mu_i - mu_j, sig_i + sig_j, eps)
    fires = (mu_i - k * sig_i) > (mu_j + k * sig_j)
    decision = np.where(fires, i, UNCERTAIN)
    return MulticlassDecisions(top1=i, top2=j, snr=snr, decision=decision)


def gmu_multiclass(
    stats: ClassStats, eps: float = DEFAULT_EPS
) -> tuple[np.ndarray, np.ndarray]:
    """Variance-gated margin uncertainty per sample.

    Returns (gmu, gamma) where gamma is the top-2 margin gate and
    gmu = 1 - mu(i) * gamma, in [1 - mu(i), 1].
    """
    rows = np.arange(stats.samples)
    i, j = top2(stats.mu)
    mu_i, mu_j = stats.mu[rows, i], stats.mu[rows, j]
    sig_i, sig_j = stats.sigma[rows, i], stats.sigma[rows, j]
    gamma = 1.0 - np.exp(-(mu_i - mu_j) / (sig_i + sig_j + eps))
    return 1.0 - mu_i * gamma, gamma


def decide_multilabel(
    mu_label: np.ndarray,
    sigma_label: np.ndarray,
    k: float,
    eps: float = DEFAULT_EPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-label presence rule on raw means u and spreads sigma.

    Returns (snr, decision) arrays matching the input shape; decision is
    PRESENT where the rule fires with u > 0.5, ABSENT where it fires with
    u < 0.5, UNCERTAIN otherwise.
    """
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    u = np.asarray(mu_label, dtype=np.float64)
    sigma = np.asarray(sigma_label, dtype=np.float64)
    mu_i = np.maximum(u, 1.0 - u)
    snr = _snr(2.0 * mu_i - 1.0, 2.0 * sigma, eps)
    fires = (mu_i - k * sigma) > (1.0 - mu_i) + k * sigma
    decision = np.where(fires, np.where(u > 0.5, PRESENT, ABSENT), UNCERTAIN)
    return snr, decision


def gmu_multilabel(
    mu_label: np.ndarray,
    sigma_label: np.ndarray,
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """Multilabel variance-gated margin uncertainty.

    After folding, mu(i) >= 0.5 always, and the score is 1 - mu(i) * gamma;
    a perfectly ambiguous label (u = 0.5) has a closed gate and GMU = 1,
    matching both one-sided limits.
    """
    u = np.asarray(mu_label, dtype=np.float64)
    sigma = np.asarray(sigma_label, dtype=np.float64)
    mu_i = np.maximum(u, 1.0 - u)
    gamma = 1.0 - np.exp(-(2.0 * mu_i - 1.0) / (2.0 * sigma + eps))
    return 1.0 - mu_i * gamma
