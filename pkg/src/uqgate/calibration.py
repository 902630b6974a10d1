"""Temperature scaling of logits, globally or per ensemble member.

The temperature minimizing validation NLL is found by a deterministic 1-D
search: a 64-point log-uniform grid over [0.01, 10.0] followed by
golden-section refinement of the bracketing interval down to a relative
width of 1e-4. T = 1 is always a candidate, so calibration never increases
NLL, and dividing logits by a positive scalar preserves the argmax, so
accuracy is untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ept import EptValidationError, PredictionTensor
from .stats import LOG_CLAMP, softmax

T_MIN = 0.01
T_MAX = 10.0
GRID_POINTS = 64
RELATIVE_WIDTH = 1e-4

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TemperatureFit:
    """Fitted temperature(s) with per-sample NLL before and after scaling.

    Scalars for a global fit; (M,) arrays for a per-member fit.
    """

    temperature: float | np.ndarray
    nll_before: float | np.ndarray
    nll_after: float | np.ndarray


def apply_temperature(logits: np.ndarray, temperature: float) -> np.ndarray:
    """softmax(logits / T); T = 1 is the identity with plain softmax."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    return softmax(np.asarray(logits, dtype=np.float64) / temperature, axis=-1)


def nll(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log likelihood in nats per sample."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape != (probs.shape[0],):
        raise ValueError(
            f"labels shape {labels.shape} does not match {probs.shape[0]} samples"
        )
    picked = probs[np.arange(probs.shape[0]), labels]
    return float(-np.log(np.clip(picked, LOG_CLAMP, None)).mean())


def _nll_at(logits: np.ndarray, labels: np.ndarray, temperature: float) -> float:
    return nll(apply_temperature(logits, temperature), labels)


def _golden_section(objective, lo: float, hi: float) -> float:
    """Minimize a unimodal objective over log-temperature [lo, hi]."""
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    # Stop when the bracket, mapped back to temperature, is relatively tight.
    while math.exp(b) - math.exp(a) > RELATIVE_WIDTH * math.exp((a + b) / 2.0):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = objective(d)
    return (a + b) / 2.0


def temperature_grid(points: int = GRID_POINTS) -> np.ndarray:
    """The log-uniform search grid over [T_MIN, T_MAX]."""
    grid = np.exp(np.linspace(math.log(T_MIN), math.log(T_MAX), points))
    # exp(log(x)) can land one ulp outside the declared bounds.
    grid[0], grid[-1] = T_MIN, T_MAX
    return grid


def fit_temperature(logits: np.ndarray, labels: np.ndarray) -> TemperatureFit:
    """Fit one temperature to (N, C) logits by minimizing NLL against labels."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2:
        raise ValueError(f"expected (samples, classes) logits, got shape {logits.shape}")
    grid = temperature_grid()
    losses = np.array([_nll_at(logits, labels, t) for t in grid])
    best = int(losses.argmin())
    lo = math.log(grid[max(best - 1, 0)])
    hi = math.log(grid[min(best + 1, len(grid) - 1)])
    refined = math.exp(_golden_section(lambda x: _nll_at(logits, labels, math.exp(x)), lo, hi))
    refined = min(max(refined, T_MIN), T_MAX)

    nll_before = _nll_at(logits, labels, 1.0)
    candidates = [refined, float(grid[best]), 1.0]
    candidate_losses = [_nll_at(logits, labels, t) for t in candidates]
    winner = int(np.argmin(candidate_losses))
    return TemperatureFit(
        temperature=candidates[winner],
        nll_before=nll_before,
        nll_after=candidate_losses[winner],
    )


def fit_per_member(tensor: PredictionTensor, labels: np.ndarray) -> TemperatureFit:
    """Independent temperature fit for every member slice of a logits tensor."""
    if tensor.manifest.kind != "logits":
        raise EptValidationError("temperature fitting requires kind=logits")
    fits = [fit_temperature(member, labels) for member in tensor.data.astype(np.float64)]
    return TemperatureFit(
        temperature=np.array([f.temperature for f in fits]),
        nll_before=np.array([f.nll_before for f in fits]),
        nll_after=np.array([f.nll_after for f in fits]),
    )
