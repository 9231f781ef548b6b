"""FedAvg federation loop: local training, optional attackers and defenses,
weighted aggregation, and per-round records.

Each communication round runs every benign client's local training from the
broadcast global model, lets each attacker observe the configured subset of
uploads (plus the previous global) and forge a malicious model, applies the
defense to the combined uploads, aggregates, and broadcasts. Clients train
independently and are reduced in fixed client-index order, so runs are
bit-reproducible for a given config and seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import DataShard, Dataset, as_shard, partition_iid
from .errors import ConfigError, ContractError
from .svm import evaluate_accuracy, local_train, model_dim, svm_loss, zero_model


def aggregate(models, reported_sizes) -> np.ndarray:
    """Size-weighted mean of model vectors: weights are D_k / sum(D).

    The weights sum to one to within 1e-12 by construction.
    """
    stacked = np.ascontiguousarray(models, dtype=np.float64)
    if stacked.ndim != 2 or stacked.shape[0] < 1:
        raise ContractError("aggregate needs a non-empty stack of model vectors")
    sizes = np.asarray(reported_sizes, dtype=np.float64)
    if sizes.shape != (stacked.shape[0],):
        raise ContractError(
            f"{sizes.size} sizes for {stacked.shape[0]} models"
        )
    if np.any(sizes <= 0):
        raise ContractError("reported sizes must be positive")
    weights = sizes / sizes.sum()
    return weights @ stacked


@dataclass
class ClientState:
    """One benign participant: identity, data shard, and current local model."""

    id: int
    shard: DataShard
    model: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class RoundRecord:
    """Snapshot of one communication round.

    Distances are Euclidean distances to this round's (post-aggregation)
    global model; accuracies are measured on the shared held-out test set.
    ``lambda_value`` is the dual multiplier the first attacker used in this
    round (0.0 when no attacker with a dual is present).
    """

    round_index: int
    benign_models: tuple[np.ndarray, ...]
    malicious_models: tuple[np.ndarray, ...]
    global_model: np.ndarray
    lambda_value: float
    benign_distances: tuple[float, ...]
    malicious_distances: tuple[float, ...]
    benign_accuracies: tuple[float, ...]
    malicious_accuracies: tuple[float, ...]
    global_accuracy: float
    global_loss: float

    @property
    def distances(self) -> tuple[float, ...]:
        """All participant distances, benign first, then attackers."""
        return self.benign_distances + self.malicious_distances

    @property
    def n_participants(self) -> int:
        return len(self.benign_models) + len(self.malicious_models)


@dataclass(frozen=True)
class FederationConfig:
    """Validated inputs of one federation run."""

    train: Dataset
    test: Dataset
    n_clients: int
    local_steps: int = 10
    rounds: int = 50
    eta: float = 0.01
    mu: float = 1.0
    seed: int = 0
    eavesdrop_count: int | None = None  # None observes every benign upload

    def __post_init__(self) -> None:
        if self.n_clients < 1:
            raise ConfigError(f"need at least one client, got {self.n_clients}")
        if self.local_steps < 1:
            raise ConfigError(f"local_steps must be >= 1, got {self.local_steps}")
        if self.rounds < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")
        if self.eta <= 0:
            raise ConfigError(f"eta must be > 0, got {self.eta}")
        if not 0 <= self.mu <= 1:
            raise ConfigError(f"mu must lie in [0, 1], got {self.mu}")
        if self.train.n_classes != self.test.n_classes:
            raise ConfigError("train and test class counts differ")
        if self.train.n_features != self.test.n_features:
            raise ConfigError("train and test feature dimensions differ")
        if self.eavesdrop_count is not None and not 1 <= self.eavesdrop_count <= self.n_clients:
            raise ConfigError(
                f"eavesdrop_count must lie in [1, {self.n_clients}], "
                f"got {self.eavesdrop_count}"
            )


def _as_attacker_list(attacker) -> list:
    if attacker is None:
        return []
    if hasattr(attacker, "forge"):
        return [attacker]
    return list(attacker)


def run_federation(config: FederationConfig, attacker=None, defense=None) -> list[RoundRecord]:
    """Run the federation and return one record per communication round.

    ``attacker`` is a plugin (or sequence of plugins) exposing
    ``forge(round_index, observed_models, observed_sizes, prev_global)``, a
    ``claimed_size`` attribute resolved after the first forge, and a
    ``lambda_value``. ``defense`` either exposes
    ``select(models, sizes, prev_global) -> (kept_indices, report)`` for
    filtered weighted aggregation, or ``aggregate(models)`` to replace the
    aggregation rule outright. Fully deterministic given the config seed.
    """
    attackers = _as_attacker_list(attacker)
    shards = partition_iid(config.train, config.n_clients, config.seed)
    n_model = model_dim(config.train.n_classes, config.train.n_features)
    clients = [
        ClientState(j, shards[j], zero_model(config.train.n_classes, config.train.n_features))
        for j in range(config.n_clients)
    ]
    train_probe = as_shard(config.train)
    global_model = zero_model(config.train.n_classes, config.train.n_features)
    observed_count = config.eavesdrop_count or config.n_clients
    records: list[RoundRecord] = []

    for round_index in range(1, config.rounds + 1):
        local_models = [
            local_train(client, global_model, config.local_steps, config.eta, config.mu)
            for client in clients
        ]
        observed = local_models[:observed_count]
        observed_sizes = [clients[j].shard.reported_size for j in range(observed_count)]
        lambda_value = attackers[0].lambda_value if attackers else 0.0
        malicious_models = []
        for k, plugin in enumerate(attackers):
            forged = np.asarray(
                plugin.forge(round_index, observed, observed_sizes, global_model),
                dtype=np.float64,
            )
            if forged.shape != (n_model,):
                raise ContractError(
                    f"attacker {k} ({type(plugin).__name__}) emitted a model of shape "
                    f"{forged.shape}, expected ({n_model},)"
                )
            malicious_models.append(forged)

        uploads = local_models + malicious_models
        sizes = [c.shard.reported_size for c in clients] + [
            int(p.claimed_size) for p in attackers
        ]
        if defense is not None and hasattr(defense, "select"):
            kept, _ = defense.select(uploads, sizes, global_model)
            new_global = aggregate([uploads[i] for i in kept], [sizes[i] for i in kept])
        elif defense is not None and hasattr(defense, "aggregate"):
            new_global = defense.aggregate(uploads)
        else:
            new_global = aggregate(uploads, sizes)

        benign_distances = tuple(
            float(np.linalg.norm(m - new_global)) for m in local_models
        )
        malicious_distances = tuple(
            float(np.linalg.norm(m - new_global)) for m in malicious_models
        )
        records.append(
            RoundRecord(
                round_index=round_index,
                benign_models=tuple(_frozen(m) for m in local_models),
                malicious_models=tuple(_frozen(m) for m in malicious_models),
                global_model=_frozen(new_global),
                lambda_value=float(lambda_value),
                benign_distances=benign_distances,
                malicious_distances=malicious_distances,
                benign_accuracies=tuple(
                    evaluate_accuracy(m, config.test) for m in local_models
                ),
                malicious_accuracies=tuple(
                    evaluate_accuracy(m, config.test) for m in malicious_models
                ),
                global_accuracy=evaluate_accuracy(new_global, config.test),
                global_loss=svm_loss(new_global, train_probe),
            )
        )
        global_model = np.asarray(new_global, dtype=np.float64)
        for client in clients:
            client.model = global_model.copy()
    return records
