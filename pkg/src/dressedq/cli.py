"""Command-line entry point: synth, train, eval, predict, plot.

Settings resolve as defaults < config file < flags, and every command that
writes into an output directory echoes its effective settings there as
``run_config.json``. Exit codes: 0 success, 2 usage error, 1 runtime error.

Only the standard library is imported at module scope: ``--threads`` must cap
the numeric libraries' thread pools before they initialize, so the heavy
imports happen inside the command handlers.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from contextlib import contextmanager
from pathlib import Path

DEFAULTS = {
    "config": None,
    "data": None,
    "manifest": None,
    "out": None,
    "checkpoint": None,
    "history": None,
    "features": None,
    "row_file": None,
    "seed": 0,
    "variant": "hadamard-cnot",
    "qubits": 4,
    "depth": 6,
    "entangler_angle": math.pi,
    "epochs": None,
    "batch": 8,
    "lr": 1e-3,
    "lr_gamma": 0.1,
    "lr_step": 10,
    "val_fraction": 0.2,
    "q_delta": 0.01,
    "per_class": 60,
    "dim": 16,
    "separation": 8.0,
    "threads": None,
}


class UsageError(Exception):
    """Bad arguments or config; maps to exit code 2."""


class StageError(RuntimeError):
    """Runtime failure tagged with the stage it happened in."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")


@contextmanager
def _stage(name: str):
    try:
        yield
    except (StageError, UsageError):
        raise
    except Exception as e:
        raise StageError(name, str(e)) from e


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dressedq",
        description="Train and evaluate a dressed variational quantum "
                    "circuit on precomputed image features.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON settings file; flags override it")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int,
                       help="cap numeric-library worker threads")

    p = sub.add_parser("synth", help="write a synthetic feature dataset")
    add_common(p)
    p.add_argument("--per-class", type=int, dest="per_class")
    p.add_argument("--dim", type=int, help="feature dimension")
    p.add_argument("--separation", type=float)

    p = sub.add_parser("train", help="train on a feature file")
    add_common(p)
    p.add_argument("--data", help="features file")
    p.add_argument("--manifest", help="manifest sidecar")
    p.add_argument("--variant", help="gate-variant preset name")
    p.add_argument("--qubits", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--entangler-angle", type=float, dest="entangler_angle")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lr-gamma", type=float, dest="lr_gamma")
    p.add_argument("--lr-step", type=int, dest="lr_step")
    p.add_argument("--val-fraction", type=float, dest="val_fraction")
    p.add_argument("--q-delta", type=float, dest="q_delta")

    p = sub.add_parser("eval", help="score a checkpoint on a feature file")
    add_common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--data")
    p.add_argument("--manifest")

    p = sub.add_parser("predict", help="classify a single feature row")
    add_common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--features", help="inline comma-separated feature row")
    p.add_argument("--row-file", dest="row_file",
                   help="file holding one comma-separated feature row")

    p = sub.add_parser("plot", help="render training curves from a history file")
    add_common(p)
    p.add_argument("--history", help="history file from train")

    return parser


def _effective_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as e:
            raise UsageError(f"cannot read config file: {e}") from e
        except json.JSONDecodeError as e:
            raise UsageError(f"config file is not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in raw.items():
            if key not in DEFAULTS or key == "config":
                raise UsageError(f"unknown config key {key!r}")
            settings[key] = value
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if key != "config" and value is not None:
            settings[key] = value
    return settings


def _require(settings: dict, *keys: str) -> None:
    for key in keys:
        if settings[key] is None:
            flag = "--" + key.replace("_", "-")
            raise UsageError(f"missing {flag} (or config key {key!r})")


def _out_dir(settings: dict) -> Path:
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run_config(out: Path, command: str, settings: dict,
                      keys: list[str]) -> None:
    payload = {"command": command}
    payload.update({k: settings[k] for k in keys})
    (out / "run_config.json").write_text(json.dumps(payload, indent=2) + "\n")


def _set_threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise UsageError(f"--threads must be >= 1, got {n}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


def cmd_synth(settings: dict) -> int:
    from .data import save_features, synth_blobs
    _require(settings, "out")
    with _stage("synth"):
        manifest, records = synth_blobs(
            seed=settings["seed"], per_class=settings["per_class"],
            feature_dim=settings["dim"], separation=settings["separation"])
    with _stage("write"):
        out = _out_dir(settings)
        save_features(manifest, records, out / "features.csv",
                      out / "manifest.json")
        _write_run_config(out, "synth", settings,
                          ["seed", "per_class", "dim", "separation", "out"])
    print(f"wrote {len(records)} records of dimension "
          f"{manifest.feature_dim} to {out}")
    return 0


def cmd_train(settings: dict) -> int:
    from .circuit import CircuitConfig, variant_preset
    from .data import load_features, split
    from .training import Checkpoint, TrainConfig, fit, save_checkpoint, \
        write_history
    _require(settings, "data", "manifest", "out", "epochs")
    with _stage("load"):
        manifest, records = load_features(settings["data"],
                                          settings["manifest"])
    with _stage("config"):
        variant = variant_preset(settings["variant"],
                                 entangler_angle=settings["entangler_angle"])
        circuit = CircuitConfig(n_qubits=settings["qubits"],
                                q_depth=settings["depth"], variant=variant)
        train_config = TrainConfig(
            epochs=settings["epochs"], batch_size=settings["batch"],
            base_lr=settings["lr"], lr_gamma=settings["lr_gamma"],
            lr_step_epochs=settings["lr_step"], q_delta=settings["q_delta"],
            seed=settings["seed"])
    with _stage("split"):
        train_records, val_records = split(records, settings["val_fraction"],
                                           seed=settings["seed"])
    with _stage("train"):
        result = fit(train_records, val_records, circuit, train_config,
                     n_classes=manifest.n_classes)
    with _stage("write"):
        out = _out_dir(settings)
        ckpt = Checkpoint(circuit=circuit, params=result.params,
                          class_names=manifest.class_names,
                          train_config=train_config.to_dict(),
                          best_epoch=result.best_epoch)
        save_checkpoint(ckpt, out / "checkpoint.json")
        write_history(result.history, out / "history.csv")
        _write_run_config(out, "train", settings, [
            "data", "manifest", "out", "seed", "variant", "qubits", "depth",
            "entangler_angle", "epochs", "batch", "lr", "lr_gamma", "lr_step",
            "val_fraction", "q_delta", "threads"])
    if result.history:
        last = result.history[-1]
        print(f"epoch {last.epoch}: train_loss={last.train_loss:.6f} "
              f"train_accuracy={last.train_accuracy:.4f} "
              f"val_loss={last.val_loss:.6f} "
              f"val_accuracy={last.val_accuracy:.4f} "
              f"(best epoch {result.best_epoch})")
    else:
        print("epochs=0: saved initial parameters, no history")
    return 0


def cmd_eval(settings: dict) -> int:
    from .data import load_features
    from .metrics import confusion, report, write_confusion, write_report
    from .plotting import plot_confusion
    from .training import load_checkpoint, predict_all
    _require(settings, "checkpoint", "data", "manifest", "out")
    with _stage("load"):
        ckpt = load_checkpoint(settings["checkpoint"])
        manifest, records = load_features(settings["data"],
                                          settings["manifest"])
    if ckpt.params.feature_dim != manifest.feature_dim:
        raise StageError(
            "eval", f"checkpoint feature_dim {ckpt.params.feature_dim} does "
            f"not match manifest feature_dim {manifest.feature_dim}")
    if ckpt.params.n_classes != manifest.n_classes:
        raise StageError(
            "eval", f"checkpoint n_classes {ckpt.params.n_classes} does not "
            f"match manifest n_classes {manifest.n_classes}")
    with _stage("eval"):
        true, pred = predict_all(ckpt.params, records, ckpt.circuit)
        matrix = confusion(true, pred, ckpt.params.n_classes)
        rep = report(matrix)
    with _stage("write"):
        out = _out_dir(settings)
        write_report(rep, out / "metrics.json")
        write_confusion(matrix, out / "confusion.csv")
        plot_confusion(matrix, ckpt.class_names, out / "confusion.svg")
        _write_run_config(out, "eval", settings,
                          ["checkpoint", "data", "manifest", "out", "threads"])
    print(f"accuracy {rep.accuracy:.6f}")
    return 0


def _parse_row(settings: dict) -> list[float]:
    inline = settings["features"]
    row_file = settings["row_file"]
    if (inline is None) == (row_file is None):
        raise UsageError("provide exactly one of --features or --row-file")
    if inline is None:
        try:
            text = Path(row_file).read_text()
        except OSError as e:
            raise UsageError(f"cannot read row file: {e}") from e
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) != 1:
            raise UsageError(
                f"row file must hold exactly one row, got {len(lines)} lines")
        inline = lines[0]
    try:
        return [float(x) for x in inline.split(",")]
    except ValueError as e:
        raise UsageError(f"malformed feature row: {e}") from e


def cmd_predict(settings: dict) -> int:
    import numpy as np

    from .dressed import predict
    from .training import load_checkpoint
    _require(settings, "checkpoint")
    row = _parse_row(settings)
    with _stage("load"):
        ckpt = load_checkpoint(settings["checkpoint"])
    if len(row) != ckpt.params.feature_dim:
        raise UsageError(f"feature row has {len(row)} values, checkpoint "
                         f"expects {ckpt.params.feature_dim}")
    with _stage("predict"):
        index = predict(ckpt.params, np.array(row), ckpt.circuit)
    print(f"{index} {ckpt.class_names[index]}")
    return 0


def cmd_plot(settings: dict) -> int:
    from .plotting import plot_history
    from .training import read_history, write_history
    _require(settings, "history", "out")
    with _stage("load"):
        history = read_history(settings["history"])
    if not history:
        raise StageError("plot", f"{settings['history']} has no epoch rows")
    with _stage("write"):
        out = _out_dir(settings)
        plot_history(history, out / "curves.svg")
        write_history(history, out / "history.csv")
        _write_run_config(out, "plot", settings, ["history", "out"])
    print(f"wrote curves for {len(history)} epochs to {out}")
    return 0


_HANDLERS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "plot": cmd_plot,
}


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        settings = _effective_settings(args)
        _set_threads(settings["threads"])
        return _HANDLERS[args.command](settings)
    except UsageError as e:
        print(f"error [usage]: {e}", file=sys.stderr)
        return 2
    except StageError as e:
        print(f"error {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(run())
