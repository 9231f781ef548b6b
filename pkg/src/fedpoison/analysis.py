"""Convergence-bound evaluation and plot-ready metrics emission.

The bound evaluator checks the closed form of the attacked federation's
optimality-gap recurrence; the asymptotic gap is the separately stated
stabilization level. The two are intentionally exposed side by side and not
reconciled. Constants are user-supplied analysis inputs, not estimated from
runs.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

from .defense import MeanPlusStd, flags_from_distances
from .errors import ConfigError, ContractError, NumericError
from .federation import RoundRecord

METRICS_HEADER = (
    "round",
    "participant_id",
    "role",
    "local_accuracy",
    "distance_to_global",
    "lambda",
    "global_accuracy",
    "global_loss",
)


@dataclass(frozen=True)
class BoundParams:
    """Constants of the convergence bound.

    ``initial_gap`` is the loss gap at round zero, ``pl_constant`` the
    gradient-dominance constant, ``loss_lipschitz`` the Lipschitz constant of
    the per-client loss, ``total_data``/``attacker_data`` the reported sample
    counts, ``loss_cap`` the attacker's maximum achievable loss under the
    distance budget ``stealth_radius``. The learning rate is assumed to be at
    most the reciprocal of the gradient's Lipschitz constant; that constant is
    unknown at runtime, so the assumption is recorded but not enforced.
    """

    initial_gap: float
    pl_constant: float
    learning_rate: float
    loss_lipschitz: float
    total_data: float
    attacker_data: float
    loss_cap: float
    stealth_radius: float

    def __post_init__(self) -> None:
        if self.initial_gap < 0:
            raise ConfigError(f"initial_gap must be >= 0, got {self.initial_gap}")
        if self.attacker_data < 0:
            raise ConfigError(f"attacker_data must be >= 0, got {self.attacker_data}")
        for name in ("pl_constant", "learning_rate", "loss_lipschitz", "total_data",
                     "loss_cap", "stealth_radius"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.total_data <= self.attacker_data:
            raise ConfigError(
                f"total_data ({self.total_data}) must exceed attacker_data "
                f"({self.attacker_data})"
            )


def contraction_factor(params: BoundParams) -> float:
    """The per-round contraction 1 - rho * eta * D^2 / (D - D_a)^2."""
    honest = params.total_data - params.attacker_data
    return 1.0 - params.pl_constant * params.learning_rate * params.total_data**2 / honest**2


def convergence_bound(params: BoundParams, t: int) -> float:
    """Optimality-gap upper bound after ``t`` communication rounds.

    Closed form of the recurrence gap <- zeta * gap + c with
    c = rho * eta * D * D_a * loss_cap / (D - D_a)^2: returns
    initial_gap * zeta^t + (1 - zeta^t) / (1 - zeta) * c. Warns when the
    contraction factor leaves (0, 1), where the bound is vacuous.
    """
    if t < 0:
        raise ContractError(f"t must be >= 0, got {t}")
    zeta = contraction_factor(params)
    if zeta == 1.0:
        raise NumericError(
            "contraction factor is exactly 1 (pl_constant * learning_rate * D^2 "
            "vanished); the geometric sum is undefined"
        )
    if not 0.0 < zeta < 1.0:
        warnings.warn(
            f"contraction factor {zeta:.6g} outside (0, 1): the bound is vacuous",
            stacklevel=2,
        )
    honest = params.total_data - params.attacker_data
    drive = (
        params.pl_constant
        * params.learning_rate
        * params.total_data
        * params.attacker_data
        / honest**2
        * params.loss_cap
    )
    geometric = (1.0 - zeta**t) / (1.0 - zeta)
    return params.initial_gap * zeta**t + geometric * drive


def asymptotic_gap(params: BoundParams) -> float:
    """Stated long-run stabilization level 2 * D_a * L_c * d_T / (D - D_a).

    ``total_data > attacker_data`` is enforced when the params are built.
    """
    return (
        2.0
        * params.attacker_data
        * params.loss_lipschitz
        * params.stealth_radius
        / (params.total_data - params.attacker_data)
    )


# ---------------------------------------------------------------------------
# Metrics CSV


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class MetricsRow:
    round_index: int
    participant_id: int
    role: str
    local_accuracy: float
    distance_to_global: float
    lambda_value: float
    global_accuracy: float
    global_loss: float


def _record_rows(record: RoundRecord) -> list[MetricsRow]:
    rows = []
    n_benign = len(record.benign_models)
    for j in range(n_benign):
        rows.append(
            MetricsRow(
                record.round_index, j, "benign",
                record.benign_accuracies[j], record.benign_distances[j],
                record.lambda_value, record.global_accuracy, record.global_loss,
            )
        )
    for k in range(len(record.malicious_models)):
        rows.append(
            MetricsRow(
                record.round_index, n_benign + k, "attacker",
                record.malicious_accuracies[k], record.malicious_distances[k],
                record.lambda_value, record.global_accuracy, record.global_loss,
            )
        )
    rows.append(
        MetricsRow(
            record.round_index, -1, "global",
            record.global_accuracy, 0.0,
            record.lambda_value, record.global_accuracy, record.global_loss,
        )
    )
    return rows


def emit_metrics(records: list[RoundRecord], out_path: str | Path) -> Path:
    """Write the per-round, per-participant metrics CSV.

    One row per participant per round plus one global row (participant_id -1).
    Floats carry 17 significant digits so values round-trip exactly.
    """
    if not records:
        raise ContractError("cannot emit metrics for an empty record list")
    out_path = Path(out_path)
    with open(out_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for record in records:
            for row in _record_rows(record):
                writer.writerow(
                    (
                        row.round_index,
                        row.participant_id,
                        row.role,
                        _fmt(row.local_accuracy),
                        _fmt(row.distance_to_global),
                        _fmt(row.lambda_value),
                        _fmt(row.global_accuracy),
                        _fmt(row.global_loss),
                    )
                )
    return out_path


def read_metrics(path: str | Path) -> list[MetricsRow]:
    """Parse a metrics CSV back into rows (inverse of :func:`emit_metrics`)."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = tuple(next(reader, ()))
        if header != METRICS_HEADER:
            raise ContractError(f"{path}: unexpected metrics header {header}")
        rows = []
        for line in reader:
            if len(line) != len(METRICS_HEADER):
                raise ContractError(f"{path}: malformed row {line}")
            rows.append(
                MetricsRow(
                    int(line[0]), int(line[1]), line[2],
                    float(line[3]), float(line[4]), float(line[5]),
                    float(line[6]), float(line[7]),
                )
            )
    return rows


def run_summary(records: list[RoundRecord], detector=None) -> dict:
    """Headline statistics of a run, JSON-ready.

    Attacker statistics apply the detector policy (default mean + 2 std) to
    each round's distances after the fact; ``attacker_stealth_rate`` is the
    fraction of rounds in which every attacker stayed within the largest
    benign distance to the global.
    """
    if not records:
        raise ContractError("cannot summarize an empty record list")
    detector = detector if detector is not None else MeanPlusStd(2.0)
    n_attackers = len(records[0].malicious_models)
    summary: dict = {
        "rounds": len(records),
        "final_global_accuracy": records[-1].global_accuracy,
        "final_global_loss": records[-1].global_loss,
        "final_lambda": records[-1].lambda_value,
        "n_benign": len(records[0].benign_models),
        "n_attackers": n_attackers,
    }
    if n_attackers == 0:
        summary.update(
            mean_attacker_distance_rank=None,
            attacker_flag_rate=None,
            attacker_flagged_rounds=0,
            attacker_stealth_rate=None,
        )
        return summary
    ranks = []
    flagged_rounds = 0
    stealthy_rounds = 0
    for record in records:
        all_d = record.distances
        flags, _ = flags_from_distances(all_d, detector)
        n_benign = len(record.benign_distances)
        attacker_flags = flags[n_benign:]
        if attacker_flags.any():
            flagged_rounds += 1
        max_benign = max(record.benign_distances)
        if all(d <= max_benign for d in record.malicious_distances):
            stealthy_rounds += 1
        for d in record.malicious_distances:
            ranks.append(1 + sum(1 for other in all_d if other < d))
    summary.update(
        mean_attacker_distance_rank=sum(ranks) / len(ranks),
        attacker_flag_rate=flagged_rounds / len(records),
        attacker_flagged_rounds=flagged_rounds,
        attacker_stealth_rate=stealthy_rounds / len(records),
    )
    return summary
