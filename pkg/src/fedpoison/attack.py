"""Model-poisoning attackers: the graph-autoencoder attack and a fake-model baseline.

The graph-autoencoder attacker eavesdrops on uploaded local models, builds
their cosine-similarity graph, and splits the stack into an orthogonal graph
basis and spectral features. A two-layer graph-convolutional encoder with an
inner-product decoder regenerates the adjacency; candidate malicious models
are the rows obtained by reassembling the genuine spectral features with the
regenerated graph's basis. Encoder weights are trained by gradient ascent on

    lagrangian(candidate) - reconstruction_loglik

where the Lagrangian trades attack gain against the Euclidean distance to the
would-be contaminated global model. The distance budget's multiplier follows
a projected dual subgradient rule between rounds. The likelihood term has an
exact analytic gradient; the Lagrangian term passes through an
eigendecomposition, so its gradient is estimated with two-point simultaneous
perturbations of the encoder weights.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .datasets import DataShard, Dataset, as_shard
from .errors import ConfigError, ContractError, DegenerateInputError, NumericError
from .graphsignal import SpectralBasis, cosine_adjacency, forward_gft, inverse_gft, laplacian, spectral_basis
from .svm import svm_loss


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class GaeModel:
    """Weights of the two-layer GCN encoder (ReLU then tanh; decoder is parameter-free)."""

    w1: np.ndarray  # (n_features, hidden)
    w2: np.ndarray  # (hidden, embed)
    dropout_rate: float = 0.1

    def __post_init__(self) -> None:
        if self.w1.ndim != 2 or self.w2.ndim != 2 or self.w1.shape[1] != self.w2.shape[0]:
            raise ContractError(
                f"incompatible encoder weights {self.w1.shape} and {self.w2.shape}"
            )
        if not (np.all(np.isfinite(self.w1)) and np.all(np.isfinite(self.w2))):
            raise NumericError("encoder weights are non-finite")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    @classmethod
    def initialize(
        cls, n_features: int, hidden: int, embed: int, dropout_rate: float, seed
    ) -> "GaeModel":
        """Glorot-uniform weights from a seeded generator."""
        if hidden < 1 or embed < 1:
            raise ConfigError(f"layer sizes must be >= 1, got h={hidden}, e={embed}")
        rng = np.random.default_rng(seed)
        lim1 = np.sqrt(6.0 / (n_features + hidden))
        lim2 = np.sqrt(6.0 / (hidden + embed))
        return cls(
            rng.uniform(-lim1, lim1, (n_features, hidden)),
            rng.uniform(-lim2, lim2, (hidden, embed)),
            dropout_rate,
        )


@dataclass(frozen=True)
class DualState:
    """Multiplier state of the distance constraint: value, budget d_T, step size."""

    lam: float
    d_target: float
    step: float

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ConfigError(f"multiplier must be >= 0, got {self.lam}")
        if self.d_target <= 0:
            raise ConfigError(f"distance budget must be > 0, got {self.d_target}")
        if self.step <= 0:
            raise ConfigError(f"dual step size must be > 0, got {self.step}")


@dataclass(frozen=True)
class AttackContext:
    """Everything the attacker knows in one round: eavesdropped uploads,
    the previous global model, and its own claimed data size."""

    observed_models: np.ndarray  # (J_obs, n_model)
    observed_sizes: np.ndarray  # (J_obs,)
    prev_global: np.ndarray  # (n_model,)
    claimed_size: int
    objective_mode: str = "surrogate"  # surrogate | oracle
    probe_set: Dataset | DataShard | None = None

    def __post_init__(self) -> None:
        observed = np.ascontiguousarray(self.observed_models, dtype=np.float64)
        sizes = np.ascontiguousarray(self.observed_sizes, dtype=np.int64)
        if observed.ndim != 2 or observed.shape[0] < 1:
            raise ContractError("observed_models must be a non-empty (J, D) stack")
        if sizes.shape != (observed.shape[0],) or np.any(sizes < 1):
            raise ContractError("observed_sizes must hold one positive size per model")
        if self.prev_global.shape != (observed.shape[1],):
            raise ContractError(
                f"previous global of dim {self.prev_global.shape} does not match "
                f"models of dim {observed.shape[1]}"
            )
        if self.claimed_size < 1:
            raise ConfigError(f"claimed_size must be >= 1, got {self.claimed_size}")
        if self.objective_mode not in ("surrogate", "oracle"):
            raise ConfigError(f"unknown objective mode {self.objective_mode!r}")
        if self.objective_mode == "oracle" and self.probe_set is None:
            raise ConfigError("oracle objective mode needs a probe_set")
        object.__setattr__(self, "observed_models", observed)
        object.__setattr__(self, "observed_sizes", sizes)
        total = float(sizes.sum() + self.claimed_size)
        object.__setattr__(self, "_benign_weights", sizes / total)
        object.__setattr__(self, "_attacker_weight", self.claimed_size / total)
        object.__setattr__(self, "_benign_part", (sizes / total) @ observed)

    @property
    def n_model(self) -> int:
        return self.observed_models.shape[1]

    def aggregate_candidate(self, candidate: np.ndarray) -> np.ndarray:
        """The contaminated global the server would form if ``candidate`` were uploaded."""
        return self._benign_part + self._attacker_weight * candidate

    def consensus_update(self) -> np.ndarray:
        """Size-weighted displacement of the observed models from the previous global."""
        return self._benign_part - self._benign_weights.sum() * self.prev_global

    def probe_shard(self) -> DataShard:
        if self.probe_set is None:
            raise ConfigError("no probe_set configured")
        if isinstance(self.probe_set, Dataset):
            return as_shard(self.probe_set)
        return self.probe_set


@dataclass(frozen=True)
class GcnCache:
    """Forward-pass intermediates retained for backpropagation."""

    operator: np.ndarray  # normalized adjacency
    z0: np.ndarray
    pre1: np.ndarray
    z1: np.ndarray
    dropout_mask: np.ndarray | None
    z1_dropped: np.ndarray
    pre2: np.ndarray
    z2: np.ndarray


# ---------------------------------------------------------------------------
# Encoder / decoder


def normalize_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """Self-loop-augmented symmetric normalization D^-1/2 (A + I) D^-1/2."""
    adjacency = np.asarray(adjacency, dtype=np.float64)
    if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
        raise ContractError(f"adjacency must be square, got shape {adjacency.shape}")
    augmented = adjacency + np.eye(adjacency.shape[0])
    degrees = augmented.sum(axis=1)
    if np.any(degrees <= 0.0):
        bad = int(np.nonzero(degrees <= 0.0)[0][0])
        raise DegenerateInputError(f"non-positive degree at vertex {bad}")
    inv_sqrt = 1.0 / np.sqrt(degrees)
    normalized = augmented * inv_sqrt[:, None] * inv_sqrt[None, :]
    return (normalized + normalized.T) / 2.0


def dropout_mask(shape: tuple[int, int], rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: kept entries scaled by 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(shape)
    return (rng.random(shape) >= rate) / (1.0 - rate)


def gcn_forward(
    gae: GaeModel,
    adjacency: np.ndarray,
    z0: np.ndarray,
    mask: np.ndarray | None = None,
) -> tuple[np.ndarray, GcnCache]:
    """Two-layer GCN embedding: tanh(N relu(N Z0 W1) W2) with N the normalized adjacency.

    ``mask`` (training only) multiplies the hidden layer elementwise; pass the
    output of :func:`dropout_mask` or None to disable.
    """
    z0 = np.asarray(z0, dtype=np.float64)
    operator = normalize_adjacency(adjacency)
    if z0.shape[0] != operator.shape[0]:
        raise ContractError(
            f"features have {z0.shape[0]} rows for a graph of {operator.shape[0]} vertices"
        )
    if z0.shape[1] != gae.w1.shape[0]:
        raise ContractError(
            f"encoder expects {gae.w1.shape[0]} input features, got {z0.shape[1]}"
        )
    pre1 = operator @ z0 @ gae.w1
    z1 = np.maximum(pre1, 0.0)
    if mask is not None:
        if mask.shape != z1.shape:
            raise ContractError(f"dropout mask shape {mask.shape} != hidden shape {z1.shape}")
        z1_dropped = z1 * mask
    else:
        z1_dropped = z1
    pre2 = operator @ z1_dropped @ gae.w2
    z2 = np.tanh(pre2)
    return z2, GcnCache(operator, z0, pre1, z1, mask, z1_dropped, pre2, z2)


def decode(embedding: np.ndarray) -> np.ndarray:
    """Inner-product decoder: sigmoid(Z Z^T). Symmetric with entries in (0, 1).

    Logits are clamped to +-36 so the output stays strictly inside (0, 1) in
    double precision even for unbounded embeddings; tanh-bounded encoder
    outputs never reach the clamp.
    """
    embedding = np.asarray(embedding, dtype=np.float64)
    if not np.all(np.isfinite(embedding)):
        raise NumericError("embedding is non-finite")
    logits = embedding @ embedding.T
    return _sigmoid(np.clip((logits + logits.T) / 2.0, -36.0, 36.0))


def bernoulli_targets(adjacency: np.ndarray, mode: str = "clamp") -> np.ndarray:
    """Map cosine similarities to edge probabilities in [0, 1].

    ``clamp`` truncates negatives to 0; ``affine`` rescales [-1, 1] to [0, 1].
    """
    adjacency = np.asarray(adjacency, dtype=np.float64)
    if mode == "clamp":
        return np.clip(adjacency, 0.0, 1.0)
    if mode == "affine":
        return np.clip((adjacency + 1.0) / 2.0, 0.0, 1.0)
    raise ConfigError(f"unknown target mode {mode!r}")


def recon_loglik(a_hat: np.ndarray, adjacency: np.ndarray, target_mode: str = "clamp") -> float:
    """Bernoulli log-likelihood of the reconstructed adjacency against the graph.

    Summed over all ordered vertex pairs including the diagonal; always <= 0
    for probabilistic reconstructions of soft targets.
    """
    a_hat = np.asarray(a_hat, dtype=np.float64)
    if np.any(a_hat <= 0.0) or np.any(a_hat >= 1.0):
        raise ContractError("reconstructed adjacency entries must lie strictly in (0, 1)")
    targets = bernoulli_targets(adjacency, target_mode)
    if targets.shape != a_hat.shape:
        raise ContractError(f"target shape {targets.shape} != reconstruction {a_hat.shape}")
    return float(np.sum(targets * np.log(a_hat) + (1.0 - targets) * np.log1p(-a_hat)))


def loglik_gradient(a_hat: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """d(log-likelihood)/d(a_hat), elementwise."""
    return targets / a_hat - (1.0 - targets) / (1.0 - a_hat)


def gcn_backprop(
    gae: GaeModel, cache: GcnCache, d_ahat: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Exact weight gradients of a scalar through decoder and encoder.

    ``d_ahat`` is the upstream gradient with respect to the decoded adjacency.
    Returns (d_w1, d_w2) matching the encoder weight shapes.
    """
    if cache.pre1.shape[1] != gae.w1.shape[1] or cache.pre2.shape[1] != gae.w2.shape[1]:
        raise ContractError("cache does not match the encoder weights")
    d_ahat = np.asarray(d_ahat, dtype=np.float64)
    if d_ahat.shape != (cache.z2.shape[0], cache.z2.shape[0]):
        raise ContractError(f"upstream gradient has shape {d_ahat.shape}")
    logits = (cache.z2 @ cache.z2.T + (cache.z2 @ cache.z2.T).T) / 2.0
    a_hat = _sigmoid(logits)
    d_logits = d_ahat * a_hat * (1.0 - a_hat)
    d_z2 = (d_logits + d_logits.T) @ cache.z2
    d_pre2 = d_z2 * (1.0 - cache.z2**2)
    d_w2 = (cache.operator @ cache.z1_dropped).T @ d_pre2
    d_z1_dropped = cache.operator.T @ d_pre2 @ gae.w2.T
    d_z1 = d_z1_dropped * cache.dropout_mask if cache.dropout_mask is not None else d_z1_dropped
    d_pre1 = d_z1 * (cache.pre1 > 0.0)
    d_w1 = (cache.operator @ cache.z0).T @ d_pre1
    return d_w1, d_w2


# ---------------------------------------------------------------------------
# Objective, synthesis, training


def attack_objective(candidate: np.ndarray, dual: DualState, context: AttackContext) -> float:
    """Lagrangian value of uploading ``candidate``.

    The gain term is either the probe-set loss of the would-be contaminated
    global (oracle mode) or, data-free, the negated projection of the global's
    displacement onto the benign consensus update (surrogate mode). Both are
    penalized by lam * (distance - budget).
    """
    candidate = np.asarray(candidate, dtype=np.float64)
    if candidate.shape != (context.n_model,):
        raise ContractError(
            f"candidate of shape {candidate.shape} does not match model dim {context.n_model}"
        )
    contaminated = context.aggregate_candidate(candidate)
    distance = float(np.linalg.norm(candidate - contaminated))
    if context.objective_mode == "oracle":
        gain = svm_loss(contaminated, context.probe_shard())
    else:
        consensus = context.consensus_update()
        norm = np.linalg.norm(consensus)
        if norm == 0.0:
            gain = 0.0
        else:
            gain = -float((contaminated - context.prev_global) @ consensus) / float(norm)
    return gain + dual.lam * (dual.d_target - distance)


def synthesize_malicious(
    a_hat: np.ndarray,
    basis: SpectralBasis,
    spectral: np.ndarray,
    dual: DualState,
    context: AttackContext,
    laplacian_mode: str = "degree",
) -> np.ndarray:
    """Reassemble candidate models from the regenerated graph and pick the best.

    Factors the reconstructed adjacency's Laplacian, reassembles the stored
    spectral features with the new basis, and returns the row maximizing the
    attack objective (ties toward the lowest row index). A degenerate
    reconstruction falls back to the identity basis.
    """
    spectral = np.asarray(spectral, dtype=np.float64)
    if spectral.shape != (basis.size, context.n_model):
        raise ContractError(
            f"spectral features {spectral.shape} do not match basis size {basis.size} "
            f"and model dim {context.n_model}"
        )
    a_hat = np.asarray(a_hat, dtype=np.float64)
    if a_hat.shape != (basis.size, basis.size):
        raise ContractError(f"reconstructed adjacency {a_hat.shape} does not match basis")
    try:
        new_basis = spectral_basis(laplacian(a_hat, laplacian_mode))
    except (NumericError, ContractError):
        new_basis = SpectralBasis(
            np.eye(basis.size), np.zeros(basis.size), np.ones(basis.size)
        )
    candidates = inverse_gft(new_basis, spectral)
    scores = np.array(
        [attack_objective(row, dual, context) for row in candidates]
    )
    return candidates[int(np.argmax(scores))].copy()


def _row_normalized(features: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(features, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateInputError("cannot row-normalize a zero model")
    return features / norms[:, None]


class _Adam:
    """Adaptive-moment ascent on a list of arrays."""

    def __init__(self, shapes, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def ascend(self, params, grads):
        self.t += 1
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1**self.t)
            v_hat = self.v[i] / (1 - self.beta2**self.t)
            out.append(p + self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
        return out


def train_gae_round(
    gae: GaeModel,
    adjacency: np.ndarray,
    features: np.ndarray,
    dual: DualState,
    context: AttackContext,
    epochs: int,
    lr: float,
    probes: int,
    seed,
    *,
    perturbation: float = 1e-3,
    target_mode: str = "clamp",
    laplacian_mode: str = "degree",
) -> tuple[GaeModel, np.ndarray, float]:
    """One communication round of adversarial encoder training and synthesis.

    Each epoch ascends lagrangian - reconstruction_loglik: the likelihood part
    by exact backpropagation (with a fresh dropout mask), the Lagrangian part
    by ``probes`` two-point simultaneous perturbations of radius
    ``perturbation`` through the synthesis pipeline. Returns the updated
    encoder, the malicious model synthesized from the final weights without
    dropout, and its Euclidean distance to the would-be contaminated global.
    Fully deterministic given the seed.
    """
    if epochs < 1:
        raise ConfigError(f"epochs must be >= 1, got {epochs}")
    if lr < 0:
        raise ConfigError(f"lr must be >= 0, got {lr}")
    if probes < 1:
        raise ConfigError(f"probes must be >= 1, got {probes}")
    if perturbation <= 0:
        raise ConfigError(f"perturbation must be > 0, got {perturbation}")
    features = np.asarray(features, dtype=np.float64)
    rng = np.random.default_rng(seed)
    basis = spectral_basis(laplacian(adjacency, laplacian_mode))
    spectral = forward_gft(basis, features)
    z0 = _row_normalized(features)
    targets = bernoulli_targets(adjacency, target_mode)
    w1, w2 = gae.w1.copy(), gae.w2.copy()
    adam = _Adam([w1.shape, w2.shape], lr)

    def lagrangian_at(w1_probe: np.ndarray, w2_probe: np.ndarray) -> float:
        model = replace(gae, w1=w1_probe, w2=w2_probe)
        z2, _ = gcn_forward(model, adjacency, z0, None)
        candidate = synthesize_malicious(
            decode(z2), basis, spectral, dual, context, laplacian_mode
        )
        return attack_objective(candidate, dual, context)

    for epoch in range(1, epochs + 1):
        current = replace(gae, w1=w1, w2=w2)
        mask = (
            dropout_mask(
                (features.shape[0], w1.shape[1]), gae.dropout_rate, rng
            )
            if gae.dropout_rate > 0.0
            else None
        )
        z2, cache = gcn_forward(current, adjacency, z0, mask)
        a_hat = decode(z2)
        g1_phi, g2_phi = gcn_backprop(current, cache, loglik_gradient(a_hat, targets))
        g1_lag = np.zeros_like(w1)
        g2_lag = np.zeros_like(w2)
        for _ in range(probes):
            delta1 = rng.integers(0, 2, w1.shape) * 2.0 - 1.0
            delta2 = rng.integers(0, 2, w2.shape) * 2.0 - 1.0
            up = lagrangian_at(w1 + perturbation * delta1, w2 + perturbation * delta2)
            down = lagrangian_at(w1 - perturbation * delta1, w2 - perturbation * delta2)
            slope = (up - down) / (2.0 * perturbation)
            g1_lag += slope * delta1
            g2_lag += slope * delta2
        g1 = g1_lag / probes - g1_phi
        g2 = g2_lag / probes - g2_phi
        if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
            raise NumericError(f"non-finite attack gradient at epoch {epoch}")
        w1, w2 = adam.ascend([w1, w2], [g1, g2])

    trained = replace(gae, w1=w1, w2=w2)
    z2, _ = gcn_forward(trained, adjacency, z0, None)
    model = synthesize_malicious(decode(z2), basis, spectral, dual, context, laplacian_mode)
    distance = float(np.linalg.norm(model - context.aggregate_candidate(model)))
    return trained, model, distance


def dual_update(dual: DualState, achieved_distance: float, sign: str = "standard") -> DualState:
    """Projected subgradient step on the distance multiplier.

    ``standard`` ascends while the budget is violated: lam <- [lam + step *
    (d - d_T)]+. ``paper`` applies the opposite, literally published sign.
    The multiplier is unchanged when the distance meets the budget exactly.
    """
    if sign == "standard":
        lam = dual.lam + dual.step * (achieved_distance - dual.d_target)
    elif sign == "paper":
        lam = dual.lam - dual.step * (achieved_distance - dual.d_target)
    else:
        raise ConfigError(f"unknown dual sign {sign!r}")
    return replace(dual, lam=max(0.0, lam))


def mp_baseline(prev_global: np.ndarray, scale: float, seed) -> np.ndarray:
    """Fake-device baseline: the previous global plus a seeded random offset of
    Euclidean length ``scale``."""
    if scale <= 0:
        raise ContractError(f"scale must be > 0, got {scale}")
    prev_global = np.asarray(prev_global, dtype=np.float64)
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(prev_global.shape)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        raise NumericError("degenerate random direction")
    return prev_global + scale * direction / norm


# ---------------------------------------------------------------------------
# Round-by-round attacker plugins for the federation loop


class GaeAttacker:
    """Stateful graph-autoencoder attacker; one instance per malicious device.

    Encoder weights persist across rounds (warm start); the dual multiplier
    follows :func:`dual_update` on each round's achieved distance. The
    distance budget defaults to the largest observed displacement of a benign
    model from the previous global, recomputed every round; the claimed data
    size defaults to the rounded mean of the observed sizes.
    """

    def __init__(
        self,
        seed: int,
        *,
        hidden: int = 32,
        embed: int = 16,
        dropout: float = 0.1,
        epochs: int = 20,
        lr: float = 0.01,
        probes: int = 4,
        perturbation: float = 1e-3,
        dual_step: float = 0.1,
        lambda_init: float = 0.0,
        d_target: float | None = None,
        claimed_size: int | None = None,
        objective_mode: str = "surrogate",
        probe_set: Dataset | DataShard | None = None,
        dual_sign: str = "standard",
        target_mode: str = "clamp",
        laplacian_mode: str = "degree",
    ) -> None:
        if lambda_init < 0:
            raise ConfigError(f"lambda_init must be >= 0, got {lambda_init}")
        if d_target is not None and d_target <= 0:
            raise ConfigError(f"d_target must be > 0, got {d_target}")
        self.seed = seed
        self.hidden = hidden
        self.embed = embed
        self.dropout = dropout
        self.epochs = epochs
        self.lr = lr
        self.probes = probes
        self.perturbation = perturbation
        self.dual_step = dual_step
        self.d_target = d_target
        self.claimed_size = claimed_size
        self.objective_mode = objective_mode
        self.probe_set = probe_set
        self.dual_sign = dual_sign
        self.target_mode = target_mode
        self.laplacian_mode = laplacian_mode
        self.gae: GaeModel | None = None
        self._lambda = float(lambda_init)

    @property
    def lambda_value(self) -> float:
        return self._lambda

    def _round_seed(self, round_index: int) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.seed, round_index])

    def forge(
        self,
        round_index: int,
        observed_models,
        observed_sizes,
        prev_global: np.ndarray,
    ) -> np.ndarray:
        observed = np.ascontiguousarray(observed_models, dtype=np.float64)
        if observed.ndim != 2 or observed.shape[0] < 2:
            raise ConfigError(
                "the graph attacker needs at least 2 observed models per round"
            )
        if self.gae is None:
            self.gae = GaeModel.initialize(
                observed.shape[1], self.hidden, self.embed, self.dropout,
                self._round_seed(0),
            )
        if self.claimed_size is None:
            self.claimed_size = int(round(float(np.mean(observed_sizes))))
        budget = self.d_target
        if budget is None:
            budget = float(np.max(np.linalg.norm(observed - prev_global, axis=1)))
            budget = max(budget, 1e-9)
        context = AttackContext(
            observed,
            np.asarray(observed_sizes),
            prev_global,
            self.claimed_size,
            self.objective_mode,
            self.probe_set,
        )
        dual = DualState(self._lambda, budget, self.dual_step)
        adjacency = cosine_adjacency(observed)
        self.gae, model, distance = train_gae_round(
            self.gae,
            adjacency,
            observed,
            dual,
            context,
            self.epochs,
            self.lr,
            self.probes,
            self._round_seed(round_index),
            perturbation=self.perturbation,
            target_mode=self.target_mode,
            laplacian_mode=self.laplacian_mode,
        )
        self._lambda = dual_update(dual, distance, self.dual_sign).lam
        return model


class MpAttacker:
    """Fake-device baseline attacker uploading scaled random offsets.

    With ``scale_mode='relative'`` the offset length is ``scale`` times the
    largest observed benign displacement from the previous global (the benign
    spread); ``'fixed'`` uses ``scale`` directly.
    """

    lambda_value = 0.0

    def __init__(
        self,
        seed: int,
        *,
        scale: float = 3.0,
        scale_mode: str = "relative",
        claimed_size: int | None = None,
    ) -> None:
        if scale <= 0:
            raise ConfigError(f"scale must be > 0, got {scale}")
        if scale_mode not in ("relative", "fixed"):
            raise ConfigError(f"unknown scale mode {scale_mode!r}")
        self.seed = seed
        self.scale = scale
        self.scale_mode = scale_mode
        self.claimed_size = claimed_size

    def forge(
        self,
        round_index: int,
        observed_models,
        observed_sizes,
        prev_global: np.ndarray,
    ) -> np.ndarray:
        observed = np.ascontiguousarray(observed_models, dtype=np.float64)
        if self.claimed_size is None:
            self.claimed_size = int(round(float(np.mean(observed_sizes))))
        if self.scale_mode == "relative":
            spread = float(np.max(np.linalg.norm(observed - prev_global, axis=1)))
            scale = max(self.scale * spread, 1e-12)
        else:
            scale = self.scale
        return mp_baseline(
            prev_global, scale, np.random.SeedSequence([self.seed, round_index])
        )
