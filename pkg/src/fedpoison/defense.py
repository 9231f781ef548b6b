"""Server-side defenses: Euclidean-distance detection and multi-Krum aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError


@dataclass(frozen=True)
class FixedThreshold:
    """Flag any model farther than ``value`` from the global."""

    value: float

    def threshold_for(self, distances: np.ndarray) -> float:
        return self.value


@dataclass(frozen=True)
class MeanPlusStd:
    """Flag any model farther than mean + k * std of the round's distances."""

    k: float = 2.0

    def threshold_for(self, distances: np.ndarray) -> float:
        return float(np.mean(distances) + self.k * np.std(distances))


@dataclass(frozen=True)
class DetectorReport:
    """Per-participant distances to the global model and threshold flags."""

    participant_ids: tuple[int, ...]
    distances: np.ndarray
    flagged: np.ndarray  # bool, aligned with participant_ids
    threshold: float


def flags_from_distances(distances, policy) -> tuple[np.ndarray, float]:
    """Apply a threshold policy to precomputed distances."""
    distances = np.asarray(distances, dtype=np.float64)
    threshold = float(policy.threshold_for(distances))
    return distances > threshold, threshold


def distance_report(models, global_model: np.ndarray, policy, ids=None) -> DetectorReport:
    """Euclidean distances of each local model to the global, with policy flags.

    ``policy`` is a FixedThreshold or MeanPlusStd instance. Deterministic and
    permutation-equivariant.
    """
    stacked = np.ascontiguousarray(models, dtype=np.float64)
    if stacked.ndim != 2 or stacked.shape[0] < 1:
        raise ContractError("need a non-empty stack of local models")
    global_model = np.asarray(global_model, dtype=np.float64)
    if global_model.shape != (stacked.shape[1],):
        raise ContractError(
            f"global of dim {global_model.shape} does not match models of dim "
            f"{stacked.shape[1]}"
        )
    if ids is None:
        ids = tuple(range(stacked.shape[0]))
    else:
        ids = tuple(int(i) for i in ids)
        if len(ids) != stacked.shape[0]:
            raise ContractError(f"{len(ids)} ids for {stacked.shape[0]} models")
    distances = np.linalg.norm(stacked - global_model, axis=1)
    flagged, threshold = flags_from_distances(distances, policy)
    return DetectorReport(ids, distances, flagged, threshold)


def multi_krum_scores(models: np.ndarray, f: int) -> np.ndarray:
    """Per-model score: sum of its n - f - 2 smallest squared distances to the others."""
    n = models.shape[0]
    closest = n - f - 2
    sq = np.sum((models[:, None, :] - models[None, :, :]) ** 2, axis=2)
    scores = np.empty(n)
    for i in range(n):
        others = np.delete(sq[i], i)
        scores[i] = np.sort(others)[:closest].sum()
    return scores


def multi_krum(models, f: int, m: int) -> np.ndarray:
    """Average of the ``m`` models with the smallest closest-neighbor scores.

    Tolerates up to ``f`` byzantine inputs among ``n`` models; requires
    n >= f + 3 and 1 <= m <= n - f - 2. Score ties resolve to the lowest
    index. Returns the unweighted mean of the selected models.
    """
    stacked = np.ascontiguousarray(models, dtype=np.float64)
    if stacked.ndim != 2:
        raise ContractError(f"expected a stack of model vectors, got shape {stacked.shape}")
    n = stacked.shape[0]
    if f < 0:
        raise ConfigError(f"f must be >= 0, got {f}")
    if n < f + 3:
        raise ConfigError(f"multi-krum needs at least f + 3 = {f + 3} models, got {n}")
    if not 1 <= m <= n - f - 2:
        raise ConfigError(f"m must lie in [1, {n - f - 2}], got {m}")
    scores = multi_krum_scores(stacked, f)
    selected = np.argsort(scores, kind="stable")[:m]
    return stacked[selected].mean(axis=0)


# ---------------------------------------------------------------------------
# In-loop defense plugins for the federation


class DistanceDefense:
    """Distance-threshold defense for the aggregation step.

    In report-only mode (default) aggregation is untouched and detection is
    evaluated after the fact from the round records. With ``exclude=True``,
    models flagged against the previous global are dropped from the weighted
    aggregate along with their reported sizes; if everything is flagged the
    round aggregates all models unchanged (the server must produce a global).
    """

    def __init__(self, policy=None, exclude: bool = False) -> None:
        self.policy = policy if policy is not None else MeanPlusStd(2.0)
        self.exclude = exclude

    def select(self, models, sizes, prev_global) -> tuple[list[int], DetectorReport | None]:
        indices = list(range(len(models)))
        if not self.exclude:
            return indices, None
        report = distance_report(models, prev_global, self.policy)
        kept = [i for i in indices if not report.flagged[i]]
        return (kept if kept else indices), report


class MultiKrumDefense:
    """Replace weighted averaging with multi-Krum selection."""

    def __init__(self, f: int, m: int) -> None:
        self.f = f
        self.m = m

    def aggregate(self, models) -> np.ndarray:
        return multi_krum(models, self.f, self.m)
