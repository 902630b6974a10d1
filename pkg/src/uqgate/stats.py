"""Ensemble moments, softmax, and entropy primitives shared by all measures.

All moments are accumulated in float64 regardless of the stored precision of
the input tensor: averaging ~100 binary32 member outputs loses about three
digits otherwise. Entropies are natural-log (nats) throughout, which keeps
the decomposition identities exact without conversion factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ept import EptValidationError, PredictionTensor, make_tensor

# Clamp applied inside logarithms only: perturbs entropy by < 3e-11 nats per
# class while keeping one-hot rows finite.
LOG_CLAMP = 1e-12


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along ``axis`` (subtracts the running max)."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.isfinite(logits).all():
        raise ValueError("softmax requires finite inputs")
    shifted = logits - logits.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=axis, keepdims=True)


def entropy(dist: np.ndarray, axis: int = -1) -> np.ndarray:
    """Shannon entropy in nats, with the convention 0 * ln 0 = 0.

    Probabilities are clamped to >= 1e-12 inside the log only; negative
    entries are rejected.
    """
    dist = np.asarray(dist, dtype=np.float64)
    if dist.min() < 0:
        raise ValueError(f"negative probability {dist.min()} passed to entropy")
    logp = np.log(np.clip(dist, LOG_CLAMP, None))
    return -(dist * logp).sum(axis=axis)


def member_probs(tensor: PredictionTensor) -> np.ndarray:
    """Member probabilities as a float64 (M, N, C) array, clipped to [0, 1].

    The container allows a 1e-6 slack on stored probabilities (binary32
    rounding); analysis code works on the clipped values.
    """
    if tensor.manifest.kind != "probs":
        raise EptValidationError("operation requires kind=probs; softmax logits first")
    return np.clip(tensor.data.astype(np.float64, copy=False), 0.0, 1.0)


def softmax_tensor(tensor: PredictionTensor) -> PredictionTensor:
    """Convert a logits tensor to a binary64 probs tensor via row softmax."""
    if tensor.manifest.kind != "logits":
        raise EptValidationError("softmax_tensor expects kind=logits")
    probs = softmax(tensor.data.astype(np.float64, copy=False), axis=-1)
    return make_tensor(
        probs,
        kind="probs",
        task=tensor.manifest.task,
        precision="binary64",
        epoch=tensor.manifest.epoch,
    )


def ensemble_mean(tensor: PredictionTensor) -> np.ndarray:
    """Per-class ensemble mean, shape (N, C)."""
    return member_probs(tensor).mean(axis=0)


def ensemble_std(tensor: PredictionTensor) -> np.ndarray:
    """Per-class ensemble standard deviation (population form), shape (N, C).

    M = 1 gives exact zeros.
    """
    return member_probs(tensor).std(axis=0)


@dataclass(frozen=True)
class ClassStats:
    """Per-sample, per-class ensemble mean and standard deviation.

    mu and sigma are (N, C) arrays; sigma <= 0.5 elementwise for valid
    probability inputs.
    """

    mu: np.ndarray
    sigma: np.ndarray

    @classmethod
    def from_tensor(cls, tensor: PredictionTensor) -> "ClassStats":
        probs = member_probs(tensor)
        return cls(mu=probs.mean(axis=0), sigma=probs.std(axis=0))

    @property
    def samples(self) -> int:
        return self.mu.shape[0]

    @property
    def classes(self) -> int:
        return self.mu.shape[1]
