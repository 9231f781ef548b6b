"""Command-line interface: single runs, sweeps, and the bound evaluator.

Subcommands:

* ``run`` — one scenario; writes metrics.csv, summary.json, and config.txt
  into the output directory.
* ``sweep-j`` — repeat the scenario over client counts, one subdirectory per
  point, plus a sweep summary CSV.
* ``sweep-eavesdrop`` — repeat over eavesdropped-upload counts and seeds.
* ``bound`` — evaluate the convergence bound and asymptotic gap per round.

Every config key is exposed as a ``--key`` flag; flags override the
``--config`` file, which overrides the documented defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import (
    BoundParams,
    asymptotic_gap,
    convergence_bound,
    emit_metrics,
    run_summary,
)
from .attack import GaeAttacker, MpAttacker
from .config import CONFIG_FIELDS, RunConfig, parse_config
from .datasets import Dataset, load_cifar10, load_idx_dataset
from .defense import DistanceDefense, FixedThreshold, MeanPlusStd, MultiKrumDefense
from .errors import ConfigError, FedPoisonError
from .federation import FederationConfig, run_federation


def load_datasets(config: RunConfig) -> tuple[Dataset, Dataset]:
    """Load and cap the configured train/test pair with a unified class count."""
    if config.dataset in ("mnist", "fashionmnist"):
        train = load_idx_dataset(
            config.resolve_data_path(config.train_images),
            config.resolve_data_path(config.train_labels),
        )
        test = load_idx_dataset(
            config.resolve_data_path(config.test_images),
            config.resolve_data_path(config.test_labels),
        )
    else:
        train = load_cifar10(
            [config.resolve_data_path(p.strip()) for p in config.cifar_train.split(",")]
        )
        test = load_cifar10([config.resolve_data_path(config.cifar_test)])
    if config.train_cap:
        train = train.take(min(config.train_cap, train.n_samples))
    if config.test_cap:
        test = test.take(min(config.test_cap, test.n_samples))
    n_classes = max(train.n_classes, test.n_classes)
    if train.n_classes != n_classes:
        train = Dataset(train.features, train.labels, n_classes)
    if test.n_classes != n_classes:
        test = Dataset(test.features, test.labels, n_classes)
    return train, test


def _attacker_seed(config: RunConfig, index: int) -> int:
    return config.seed + 1_000_003 * (index + 1)


def build_attackers(config: RunConfig, train: Dataset) -> list:
    if config.attack == "none":
        return []
    attackers = []
    for i in range(config.attackers):
        seed = _attacker_seed(config, i)
        if config.attack == "mp":
            attackers.append(
                MpAttacker(
                    seed,
                    scale=config.mp_scale,
                    scale_mode=config.mp_scale_mode,
                    claimed_size=config.claimed_size or None,
                )
            )
        else:
            attackers.append(
                GaeAttacker(
                    seed,
                    hidden=config.gae_hidden,
                    embed=config.gae_embed,
                    dropout=config.gae_dropout,
                    epochs=config.gae_epochs,
                    lr=config.gae_lr,
                    probes=config.gae_probes,
                    perturbation=config.gae_perturbation,
                    dual_step=config.dual_step,
                    lambda_init=config.lambda_init,
                    d_target=config.d_T_value if config.d_T_policy == "fixed" else None,
                    claimed_size=config.claimed_size or None,
                    objective_mode=config.objective,
                    probe_set=train if config.objective == "oracle" else None,
                    dual_sign=config.dual_sign,
                    target_mode=config.target_mode,
                    laplacian_mode=config.laplacian,
                )
            )
    return attackers


def detector_policy(config: RunConfig):
    if config.detect_policy == "fixed":
        return FixedThreshold(config.detect_threshold)
    return MeanPlusStd(config.detect_k)


def build_defense(config: RunConfig):
    if config.defense == "none":
        return None
    if config.defense == "distance":
        return DistanceDefense(detector_policy(config), exclude=config.exclude_flagged)
    return MultiKrumDefense(config.krum_f, config.krum_m)


def run_scenario(config: RunConfig, quiet: bool = False) -> int:
    """Execute one configured run and write its artifacts.

    Writes ``metrics.csv``, ``summary.json``, and ``config.txt`` into
    ``config.output_dir``; returns the process exit status.
    """
    train, test = load_datasets(config)
    fed = FederationConfig(
        train=train,
        test=test,
        n_clients=config.J,
        local_steps=config.T_L,
        rounds=config.T_FL,
        eta=config.eta,
        mu=config.mu,
        seed=config.seed,
        eavesdrop_count=config.eavesdrop_count or None,
    )
    records = run_federation(fed, build_attackers(config, train), build_defense(config))
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_metrics(records, out / "metrics.csv")
    summary = run_summary(records, detector_policy(config))
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    (out / "config.txt").write_text("\n".join(config.snapshot_lines()) + "\n")
    if not quiet:
        print(f"run complete: {len(records)} rounds -> {out}")
        print(f"  final global accuracy: {summary['final_global_accuracy']:.4f}")
        if summary["n_attackers"]:
            print(f"  attacker flag rate:    {summary['attacker_flag_rate']:.2f}")
            print(f"  attacker stealth rate: {summary['attacker_stealth_rate']:.2f}")
    return 0


# ---------------------------------------------------------------------------
# argparse wiring


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", default=None,
                        help="key=value config file (# comments allowed)")
    group = parser.add_argument_group("config keys")
    for f in CONFIG_FIELDS:
        group.add_argument(
            f"--{f.name}", metavar="V", default=None,
            help=f"{f.help} (default: {f.default})",
        )


def _config_from_args(args: argparse.Namespace, **extra) -> RunConfig:
    overrides = {f.name: getattr(args, f.name) for f in CONFIG_FIELDS}
    overrides.update(extra)
    return parse_config(args.config, overrides)


def _parse_int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from exc
    if not values:
        raise ConfigError(f"empty value list: {text!r}")
    return values


def _cmd_run(args: argparse.Namespace) -> int:
    return run_scenario(_config_from_args(args))


def _write_sweep_summary(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _cmd_sweep_j(args: argparse.Namespace) -> int:
    base = _config_from_args(args)
    out_root = Path(base.output_dir)
    rows = []
    for j in _parse_int_list(args.values):
        extra = {"J": j, "output_dir": str(out_root / f"J_{j}")}
        if base.attack != "none" and args.attacker_ratio > 0:
            extra["attackers"] = max(1, round(args.attacker_ratio * j))
        config = _config_from_args(args, **{k: str(v) for k, v in extra.items()})
        run_scenario(config, quiet=True)
        summary = json.loads((Path(config.output_dir) / "summary.json").read_text())
        rows.append([j, summary["n_attackers"], f"{summary['final_global_accuracy']:.6f}"])
        print(f"J={j}: final accuracy {summary['final_global_accuracy']:.4f}")
    out_root.mkdir(parents=True, exist_ok=True)
    _write_sweep_summary(out_root / "sweep_summary.csv",
                         ["J", "attackers", "final_global_accuracy"], rows)
    return 0


def _cmd_sweep_eavesdrop(args: argparse.Namespace) -> int:
    base = _config_from_args(args)
    out_root = Path(base.output_dir)
    seeds = _parse_int_list(args.seeds) if args.seeds else [base.seed]
    rows = []
    for count in _parse_int_list(args.values):
        for seed in seeds:
            extra = {
                "eavesdrop_count": str(count),
                "seed": str(seed),
                "output_dir": str(out_root / f"eavesdrop_{count}_seed_{seed}"),
            }
            config = _config_from_args(args, **extra)
            run_scenario(config, quiet=True)
            summary = json.loads((Path(config.output_dir) / "summary.json").read_text())
            rows.append([count, seed, f"{summary['final_global_accuracy']:.6f}"])
            print(
                f"eavesdrop={count} seed={seed}: "
                f"final accuracy {summary['final_global_accuracy']:.4f}"
            )
    out_root.mkdir(parents=True, exist_ok=True)
    _write_sweep_summary(out_root / "sweep_summary.csv",
                         ["eavesdrop_count", "seed", "final_global_accuracy"], rows)
    return 0


def _cmd_bound(args: argparse.Namespace) -> int:
    params = BoundParams(
        initial_gap=args.initial_gap,
        pl_constant=args.pl_constant,
        learning_rate=args.learning_rate,
        loss_lipschitz=args.loss_lipschitz,
        total_data=args.total_data,
        attacker_data=args.attacker_data,
        loss_cap=args.loss_cap,
        stealth_radius=args.stealth_radius,
    )
    lines = ["t,bound"]
    for t in range(args.rounds + 1):
        lines.append(f"{t},{convergence_bound(params, t):.17g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.rounds + 1} bound values to {args.out}")
    else:
        sys.stdout.write(text)
    print(f"asymptotic_gap,{asymptotic_gap(params):.17g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedpoison",
        description="Deterministic federated-learning poisoning laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured scenario")
    _add_config_arguments(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_j = sub.add_parser("sweep-j", help="sweep the number of benign clients")
    _add_config_arguments(p_j)
    p_j.add_argument("--values", default="5,10,15,20,25",
                     help="comma-separated client counts (default: 5,10,15,20,25)")
    p_j.add_argument("--attacker-ratio", type=float, default=0.4,
                     help="attackers per client at each point, rounded, min 1 "
                          "(0 keeps the configured count; default: 0.4)")
    p_j.set_defaults(func=_cmd_sweep_j)

    p_e = sub.add_parser("sweep-eavesdrop", help="sweep the eavesdropped-upload count")
    _add_config_arguments(p_e)
    p_e.add_argument("--values", default="3,5",
                     help="comma-separated eavesdrop counts (default: 3,5)")
    p_e.add_argument("--seeds", default="",
                     help="comma-separated seeds (default: the configured seed)")
    p_e.set_defaults(func=_cmd_sweep_eavesdrop)

    p_b = sub.add_parser("bound", help="evaluate the convergence bound per round")
    p_b.add_argument("--initial-gap", type=float, required=True)
    p_b.add_argument("--pl-constant", type=float, required=True)
    p_b.add_argument("--learning-rate", type=float, required=True)
    p_b.add_argument("--loss-lipschitz", type=float, default=1.0)
    p_b.add_argument("--total-data", type=float, required=True)
    p_b.add_argument("--attacker-data", type=float, required=True)
    p_b.add_argument("--loss-cap", type=float, required=True)
    p_b.add_argument("--stealth-radius", type=float, default=1.0)
    p_b.add_argument("--rounds", type=int, default=50)
    p_b.add_argument("--out", default=None, help="write the per-round CSV here")
    p_b.set_defaults(func=_cmd_bound)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (FedPoisonError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
