"""fedpoison: a deterministic federated-learning simulator and model-poisoning
attack laboratory with graph-autoencoder and fake-model attackers,
distance/multi-Krum defenses, and a convergence-bound evaluator."""

from .analysis import BoundParams, asymptotic_gap, convergence_bound, emit_metrics, run_summary
from .attack import GaeAttacker, GaeModel, MpAttacker, dual_update, mp_baseline, train_gae_round
from .config import RunConfig, parse_config
from .datasets import Dataset, DataShard, load_cifar10, load_idx_dataset, partition_iid
from .defense import distance_report, multi_krum
from .federation import FederationConfig, RoundRecord, aggregate, run_federation
from .graphsignal import cosine_adjacency, forward_gft, inverse_gft, laplacian, spectral_basis
from .svm import evaluate_accuracy, local_train, svm_loss

__version__ = "0.1.0"

__all__ = [
    "BoundParams", "asymptotic_gap", "convergence_bound", "emit_metrics", "run_summary",
    "GaeAttacker", "GaeModel", "MpAttacker", "dual_update", "mp_baseline", "train_gae_round",
    "RunConfig", "parse_config",
    "Dataset", "DataShard", "load_cifar10", "load_idx_dataset", "partition_iid",
    "distance_report", "multi_krum",
    "FederationConfig", "RoundRecord", "aggregate", "run_federation",
    "cosine_adjacency", "forward_gft", "inverse_gft", "laplacian", "spectral_basis",
    "evaluate_accuracy", "local_train", "svm_loss",
    "__version__",
]
