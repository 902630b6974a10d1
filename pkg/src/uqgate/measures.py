"""Entropy decomposition and expected pairwise divergences over members.

The pairwise measures (EPCE, EPKL, EPJS) average over all M^2 ordered member
pairs including self-pairs; self terms vanish for KL and JS and reduce to
member entropies for cross-entropy, which yields the exact identity
EPKL = EPCE - AU. Logs share the 1e-12 clamp from stats, so divergences of
disjoint one-hot rows stay large but finite (about 27.6 nats).
"""

from __future__ import annotations

import numpy as np

from .ept import PredictionTensor
from .gating import Decomposition
from .stats import LOG_CLAMP, entropy, member_probs


def standard_decomposition(tensor: PredictionTensor) -> Decomposition:
    """Ungated per-sample TU/AU/EU: entropy of the mean, mean entropy, difference."""
    probs = member_probs(tensor)
    tu = entropy(probs.mean(axis=0))
    au = entropy(probs).mean(axis=0)
    return Decomposition(tu=tu, au=au, eu=tu - au)


def epce(tensor: PredictionTensor) -> np.ndarray:
    """Expected pairwise cross-entropy per sample, in nats.

    CE is bilinear in (p_m, log p_m'), so the ordered-pair average
    factorizes into mean probabilities against mean log-probabilities.
    """
    probs = member_probs(tensor)
    logp = np.log(np.clip(probs, LOG_CLAMP, None))
    return -(probs.mean(axis=0) * logp.mean(axis=0)).sum(axis=-1)


def epkl(tensor: PredictionTensor) -> np.ndarray:
    """Expected pairwise KL divergence per sample, in nats."""
    probs = member_probs(tensor)
    logp = np.log(np.clip(probs, LOG_CLAMP, None))
    cross = -(probs.mean(axis=0) * logp.mean(axis=0)).sum(axis=-1)
    self_term = (probs * logp).sum(axis=-1).mean(axis=0)
    return cross + self_term


def epjs(tensor: PredictionTensor) -> np.ndarray:
    """Expected pairwise Jensen-Shannon divergence per sample, in nats.

    JS(p, q) = H((p + q) / 2) - (H(p) + H(q)) / 2; bounded by ln 2.
    Mixture entropies do not factorize, so one member is blocked at a time
    to keep memory at O(MNC) instead of O(M^2 NC).
    """
    probs = member_probs(tensor)
    m, n, _ = probs.shape
    member_h = entropy(probs)  # (M, N)
    mix_h_total = np.zeros(n)
    for i in range(m):
        mix_h_total += entropy((probs[i][None, :, :] + probs) / 2.0).sum(axis=0)
    mean_mix_h = mix_h_total / (m * m)
    return mean_mix_h - member_h.mean(axis=0)
