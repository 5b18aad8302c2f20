"""Command-line front door: dataset generation, experiment sweeps, baseline
comparisons and the annotation server.

Configuration can come from a flat INI-style file (section headers, key=value
lines); command-line flags always override file values. Exit codes: 0 on
success, 1 on runtime failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import configparser
import socket
import sys
from pathlib import Path

import numpy as np

from . import engine
from .classifier import TrainConfig
from .dataset import Dataset, SyntheticSpec, generate_synthetic, load_csv, write_csv
from .engine import (
    ALL_STRATEGIES,
    LoopConfig,
    baseline_noisy_pool,
    baseline_supervised,
    load_checkpoint,
    run_loop,
    save_checkpoint,
    simulated_oracle,
)


class ConfigFile:
    """Typed access to the optional key=value config with section headers."""

    def __init__(self, path: str | None):
        self.parser = configparser.ConfigParser()
        if path:
            read = self.parser.read(path)
            if not read:
                raise FileNotFoundError(f"config file not found: {path}")

    def get(self, section: str, key: str, cast=str, default=None):
        if self.parser.has_option(section, key):
            return cast(self.parser.get(section, key))
        return default


def _pick(flag_value, config: ConfigFile, section: str, key: str, cast, default):
    if flag_value is not None:
        return flag_value
    return config.get(section, key, cast, default)


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok)


def _parse_str_list(text: str) -> list[str]:
    return [tok for tok in text.replace(" ", "").split(",") if tok]


def _add_dataset_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", help="dataset CSV path (omit to generate synthetic data)")
    parser.add_argument("--classes", type=int, help="synthetic: number of classes")
    parser.add_argument("--dims", type=int, help="synthetic: feature dimensionality")
    parser.add_argument("--seed-per-class", type=int, help="synthetic: seed examples per class")
    parser.add_argument("--pool-per-class", type=int, help="synthetic: pool examples per class")
    parser.add_argument("--irrelevant", type=int, help="synthetic: irrelevant pool items")
    parser.add_argument("--test-per-class", type=int, help="synthetic: test examples per class")
    parser.add_argument("--separation", type=float, help="synthetic: cluster separation in sigmas")
    parser.add_argument("--data-rng-seed", type=int, help="synthetic: generator seed")


def _add_loop_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--budget", type=int, help="iteration budget (max iterations)")
    parser.add_argument("--batch-size", type=int, help="instances per iteration")
    parser.add_argument("--retrain-every", type=int, help="retraining cadence in iterations")
    parser.add_argument("--committee-size", type=int, help="committee size for ve/ce/md")
    parser.add_argument("--checkpoints", help="comma list of checkpoint iterations")
    parser.add_argument("--max-epochs", type=int, help="classifier training epochs")
    parser.add_argument("--l2-penalty", type=float, help="classifier L2 penalty")
    parser.add_argument("--learning-rate", type=float, help="classifier learning rate")


def _synthetic_spec(args, config: ConfigFile) -> SyntheticSpec:
    return SyntheticSpec(
        num_classes=_pick(args.classes, config, "dataset", "classes", int, 8),
        dimensionality=_pick(args.dims, config, "dataset", "dims", int, 16),
        seed_per_class=_pick(args.seed_per_class, config, "dataset", "seed_per_class", int, 20),
        pool_per_class=_pick(args.pool_per_class, config, "dataset", "pool_per_class", int, 200),
        irrelevant_count=_pick(args.irrelevant, config, "dataset", "irrelevant", int, 0),
        test_per_class=_pick(args.test_per_class, config, "dataset", "test_per_class", int, 50),
        cluster_separation=_pick(args.separation, config, "dataset", "separation", float, 3.0),
        rng_seed=_pick(args.data_rng_seed, config, "dataset", "rng_seed", int, 0),
    )


def _resolve_dataset(args, config: ConfigFile) -> Dataset:
    csv_path = _pick(getattr(args, "dataset", None), config, "dataset", "csv", str, None)
    if csv_path:
        return load_csv(csv_path)
    return generate_synthetic(_synthetic_spec(args, config))


def _train_config(args, config: ConfigFile) -> TrainConfig:
    return TrainConfig(
        l2_penalty=_pick(args.l2_penalty, config, "classifier", "l2_penalty", float, 1e-3),
        learning_rate=_pick(args.learning_rate, config, "classifier", "learning_rate", float, 0.1),
        max_epochs=_pick(args.max_epochs, config, "classifier", "max_epochs", int, 500),
    )


def _loop_config(args, config: ConfigFile, strategy: str, rng_seed: int) -> LoopConfig:
    checkpoints = _pick(args.checkpoints, config, "loop", "checkpoints", str, None)
    return LoopConfig(
        strategy=strategy,
        batch_size=_pick(args.batch_size, config, "loop", "batch_size", int, 1),
        max_iterations=_pick(args.budget, config, "loop", "budget", int, 2000),
        checkpoint_iterations=_parse_int_list(checkpoints) if checkpoints else None,
        committee_size=_pick(args.committee_size, config, "loop", "committee_size", int, 3),
        classifier_cfg=_train_config(args, config),
        retrain_every=_pick(args.retrain_every, config, "loop", "retrain_every", int, 1),
        rng_seed=rng_seed,
    )


# -- commands ------------------------------------------------------------------------


def cmd_generate(args) -> int:
    config = ConfigFile(args.config)
    spec = _synthetic_spec(args, config)
    ds = generate_synthetic(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out)
    print(f"wrote {out}")
    print(f"seed={len(ds.seed_set)} pool={len(ds.pool)} test={len(ds.test_set)}")
    return 0


def _format_summary(strategies, checkpoints, table) -> str:
    """Mean accuracy per (strategy, checkpoint), printed to 2 decimals."""
    header = "strategy  " + "  ".join(f"{c:>6d}" for c in checkpoints)
    lines = [header]
    for strategy in strategies:
        cells = []
        for c in checkpoints:
            values = table.get((strategy, c), [])
            cells.append(f"{np.mean(values):6.2f}" if values else "     -")
        lines.append(f"{strategy:<8s}  " + "  ".join(cells))
    return "\n".join(lines)


def cmd_run(args) -> int:
    config = ConfigFile(args.config)
    ds = _resolve_dataset(args, config)
    strategies = _parse_str_list(
        _pick(args.strategies, config, "run", "strategies", str, "lc,ms,es,ve,ce,md")
    )
    for strategy in strategies:
        if strategy not in ALL_STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
    repetitions = _pick(args.repetitions, config, "run", "repetitions", int, 1)
    base_seed = _pick(args.rng_seed, config, "loop", "rng_seed", int, 0)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    oracle = simulated_oracle(ds)
    table: dict[tuple[str, int], list[float]] = {}
    checkpoints: tuple[int, ...] = ()
    for strategy in strategies:
        for rep in range(repetitions):
            cfg = _loop_config(args, config, strategy, base_seed + rep)
            checkpoints = cfg.checkpoint_iterations
            session = engine.LoopSession(ds, cfg)
            curve_path = out_dir / f"curve_{strategy}_rep{rep}.csv"
            try:
                while not session.complete:
                    session.step(oracle)
            except (KeyboardInterrupt, engine.OracleFailure):
                resume_path = out_dir / f"resume_{strategy}_rep{rep}.json"
                save_checkpoint(session, resume_path)
                engine.export_curve(session.curve, curve_path)
                print(f"interrupted; resumable checkpoint at {resume_path}", file=sys.stderr)
                raise
            engine.export_curve(session.curve, curve_path)
            if args.verbose:
                final = session.curve.points[-1].test_accuracy if session.curve.points else None
                print(f"{strategy} rep{rep}: final accuracy {final}")
            for point in session.curve.points:
                table.setdefault((strategy, point.iteration), []).append(point.test_accuracy)

    summary_path = out_dir / "summary.csv"
    with summary_path.open("w", encoding="utf-8") as fh:
        fh.write("strategy," + ",".join(str(c) for c in checkpoints) + "\n")
        for strategy in strategies:
            cells = []
            for c in checkpoints:
                values = table.get((strategy, c), [])
                cells.append(format(float(np.mean(values)), ".17g") if values else "")
            fh.write(strategy + "," + ",".join(cells) + "\n")
    print(_format_summary(strategies, checkpoints, table))
    print(f"summary written to {summary_path}")
    return 0


def cmd_baselines(args) -> int:
    config = ConfigFile(args.config)
    ds = _resolve_dataset(args, config)
    strategies = _parse_str_list(
        _pick(args.strategies, config, "run", "strategies", str, "") or ""
    )
    base_seed = _pick(args.rng_seed, config, "loop", "rng_seed", int, 0)
    train_cfg = _train_config(args, config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = [
        ("baseline_supervised", baseline_supervised(ds, train_cfg)),
        ("baseline_noisy_pool", baseline_noisy_pool(ds, train_cfg)),
    ]
    oracle = simulated_oracle(ds)
    test_X, test_y = engine.labeled_pairs(ds.test_set)
    for strategy in strategies:
        cfg = _loop_config(args, config, strategy, base_seed)
        _, state = run_loop(ds, cfg, oracle)
        rows.append((strategy, engine.evaluate_artifact(state.model_or_committee, test_X, test_y)))

    path = out_dir / "baselines.csv"
    with path.open("w", encoding="utf-8") as fh:
        fh.write("method,accuracy\n")
        for name, acc in rows:
            fh.write(f"{name},{acc:.17g}\n")
    width = max(len(name) for name, _ in rows)
    for name, acc in rows:
        print(f"{name:<{width}s}  {acc:.2f}")
    print(f"comparison written to {path}")
    return 0


def build_server(args):
    """Construct (server, app, host, port) for `serve`; split out for tests."""
    from .service import AnnotationServer, create_app

    config = ConfigFile(args.config)
    ds = _resolve_dataset(args, config)
    strategy = _pick(args.strategy, config, "loop", "strategy", str, "lc")
    rng_seed = _pick(args.rng_seed, config, "loop", "rng_seed", int, 0)
    cfg = _loop_config(args, config, strategy, rng_seed)
    checkpoint = _pick(args.checkpoint, config, "serve", "checkpoint", str, None)
    if checkpoint and Path(checkpoint).exists():
        session = load_checkpoint(ds, cfg, checkpoint)
    else:
        session = engine.LoopSession(ds, cfg)
    server = AnnotationServer(
        session,
        checkpoint_path=checkpoint,
        query_expiry_seconds=_pick(args.expiry, config, "serve", "expiry", float, None),
    )
    static_dir = _pick(args.static_dir, config, "serve", "static_dir", str, None)
    app = create_app(server, static_dir=static_dir)
    bind = _pick(args.bind, config, "serve", "bind", str, "127.0.0.1:8000")
    host, _, port_text = bind.rpartition(":")
    return server, app, host or "127.0.0.1", int(port_text)


def cmd_serve(args) -> int:
    import uvicorn

    server, app, host, port = build_server(args)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        print(f"cannot bind {host}:{port}: {exc}", file=sys.stderr)
        return 1
    finally:
        probe.close()
    print(f"serving {server.session.cfg.strategy} loop on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activepool",
                                     description="Pool-based active learning experiments")
    parser.add_argument("--verbose", action="store_true", help="print per-run progress")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset CSV")
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.add_argument("--config", help="config file")
    _add_dataset_flags(gen)

    run = sub.add_parser("run", help="sweep strategies and emit learning curves")
    run.add_argument("--config", help="config file")
    run.add_argument("--out-dir", default=".", help="directory for curve and summary CSVs")
    run.add_argument("--strategies", help="comma list from lc,ms,es,ve,ce,md,random")
    run.add_argument("--repetitions", type=int, help="repetitions per strategy")
    run.add_argument("--rng-seed", type=int, help="base loop seed; rep r uses seed+r")
    _add_dataset_flags(run)
    _add_loop_flags(run)

    base = sub.add_parser("baselines", help="compare strategies against the two baselines")
    base.add_argument("--config", help="config file")
    base.add_argument("--out-dir", default=".", help="directory for the comparison CSV")
    base.add_argument("--strategies", help="strategies to run at full budget (may be empty)")
    base.add_argument("--rng-seed", type=int, help="loop seed")
    _add_dataset_flags(base)
    _add_loop_flags(base)

    serve = sub.add_parser("serve", help="start the human-annotation HTTP service")
    serve.add_argument("--config", help="config file")
    serve.add_argument("--bind", help="host:port (default 127.0.0.1:8000)")
    serve.add_argument("--strategy", help="query strategy for the live loop")
    serve.add_argument("--rng-seed", type=int, help="loop seed")
    serve.add_argument("--checkpoint", help="checkpoint file to save to and resume from")
    serve.add_argument("--static-dir", help="directory with the UI bundle to mount at /")
    serve.add_argument("--expiry", type=float, help="pending query expiry in seconds")
    _add_dataset_flags(serve)
    _add_loop_flags(serve)

    return parser


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "baselines": cmd_baselines,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
