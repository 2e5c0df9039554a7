"""Command-line entry point: gen-dataset, train, synth, encode, eval, sweep.

Every command returns an exit code from ``main(argv)``: 0 when all outputs
were written, 2 on a ``PcinrError`` (printed as ``error: ...`` on stderr).
Output files are written under temporary names and renamed into place only
when the command succeeds.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import json
import os
import shutil
import sys
import tempfile
import warnings
from collections.abc import Iterator, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from pcinr import __version__
from pcinr.audio import (
    Waveform,
    describe,
    fit_length,
    generate_synth_set,
    load_dataset,
    load_synth_spec,
    read_wav,
    write_wav,
)
from pcinr.config import RESOLVED_NAME, RunConfig, load_config_file, resolve_config, write_resolved
from pcinr.core import Emitter, EventCollector, FanoutSink
from pcinr.decorators import timed
from pcinr.errors import ConfigError, PcinrError
from pcinr.exporters import ConsoleExporter, JSONLExporter
from pcinr.metrics import evaluate_runs, write_report
from pcinr.numerics import check_finite
from pcinr.presets import BUNDLED, preset_path
from pcinr.runtime import now_ns, run_id, use_run
from pcinr.sweep import TrainingObjective, best_dict, stub_objective, successive_halving, write_leaderboard
from pcinr.training import (
    build_state,
    config_hash,
    encode_unseen,
    ensemble_synthesize,
    interpolate_latents,
    latent_loss,
    load_checkpoint,
    load_latent,
    save_checkpoint,
    save_latent,
    synthesize,
    train_epoch,
)
from pcinr.training.state import TrainState

__all__ = ["build_parser", "main"]

EXIT_OK = 0
EXIT_ERROR = 2
CHECKPOINT_NAME = "checkpoint.pcnr"
LOSS_LOG_NAME = "loss.csv"
LOSS_LOG_HEADER = ("epoch", "mse", "deriv", "wr", "total")
EVENTS_NAME = "events.jsonl"


# ---------------------------------------------------------------- output plumbing


class _Outputs:
    def __init__(self) -> None:
        self._pending: list[tuple[Path, Path]] = []

    def path(self, final: str | os.PathLike[str]) -> Path:
        target = Path(final)
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp = target.with_name(f".{target.name}.{os.getpid()}.tmp")
        self._pending.append((tmp, target))
        return tmp

    def commit(self) -> None:
        for tmp, final in self._pending:
            os.replace(tmp, final)

    def discard(self) -> None:
        for tmp, _ in self._pending:
            with contextlib.suppress(FileNotFoundError):
                tmp.unlink()


@contextlib.contextmanager
def atomic_outputs() -> Iterator[_Outputs]:
    """Files requested via ``.path()`` appear under their final names only if the block succeeds."""
    outs = _Outputs()
    try:
        yield outs
    except BaseException:
        outs.discard()
        raise
    outs.commit()


@contextlib.contextmanager
def staged_dir(out: Path) -> Iterator[Path]:
    """Scratch directory beside ``out``; its files move into ``out`` only if the block succeeds.

    On failure the scratch directory is removed and ``out`` is left as it was.
    """
    out.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{out.name}.", suffix=".tmp", dir=out.parent))
    try:
        yield stage
        out.mkdir(parents=True, exist_ok=True)
        for f in sorted(stage.iterdir()):
            os.replace(f, out / f.name)
    finally:
        shutil.rmtree(stage, ignore_errors=True)


@contextlib.contextmanager
def telemetry(out_dir: Path | None, verbose: bool) -> Iterator[Emitter]:
    sinks: list[Any] = []
    if out_dir is not None:
        sinks.append(JSONLExporter(out_dir / EVENTS_NAME))
    if verbose:
        sinks.append(ConsoleExporter())
    if not sinks:
        yield Emitter(None)
        return
    with EventCollector(FanoutSink(sinks)) as collector:
        yield Emitter(collector)


def _echo(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _echo_name(command: str) -> str:
    # synth/encode write beside other runs; a per-command name keeps a run's own echo intact
    return f"{command}.resolved.json"


def _resolve(args: argparse.Namespace, **extra: Any) -> RunConfig:
    file_values = load_config_file(args.config) if args.config else {}
    flags = {
        "arch": args.arch,
        "epochs": args.epochs,
        "seed": args.seed,
        "lambda_wr": args.lambda_wr,
        "optimizer": args.optimizer,
        **extra,
    }
    return resolve_config(file_values, flags)


def _item(text: str) -> int | str:
    return int(text) if text.lstrip("-").isdigit() else text


def _split(text: str | None) -> list[str]:
    return [p for p in (text or "").split(",") if p]


# ---------------------------------------------------------------- commands


def cmd_gen_dataset(args: argparse.Namespace) -> int:
    spec_arg = args.spec
    spec_path = preset_path(spec_arg) if spec_arg.removesuffix(".spec") in BUNDLED and not Path(spec_arg).exists() else Path(spec_arg)
    spec = load_synth_spec(spec_path)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    out = Path(args.out or f"data/{spec.name}")
    with staged_dir(out) as stage:
        with telemetry(None, args.verbose) as emitter, use_run(phase="gen-dataset"):
            timed(emitter, "generate_synth_set")(generate_synth_set)(spec, stage)
        _echo(stage / RESOLVED_NAME, {"command": "gen-dataset", "spec": str(spec_path), "out": str(out), **describe(spec)})
    print(out / "manifest.csv")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _resolve(
        args,
        dataset=args.dataset,
        out=args.out,
        sample_count=args.samples,
        batch_items=args.batch_items,
        checkpoint_every=args.checkpoint_every,
        allow_rate_mismatch=True if args.resample_off else None,
    )
    if not cfg.dataset:
        raise ConfigError("train needs --dataset (or a 'dataset' key in the config file)")
    out = Path(cfg.out)
    dataset = load_dataset(
        cfg.dataset,
        sample_count=cfg.sample_count,
        sample_rate=cfg.sample_rate,
        allow_rate_mismatch=cfg.allow_rate_mismatch,
    )
    tcfg = cfg.train_config()
    state = build_state(
        tcfg,
        len(dataset),
        sample_count=dataset.sample_count,
        sample_rate=dataset.sample_rate,
        dataset_hash=dataset.content_hash,
        item_ids=dataset.item_ids,
    )
    ckpt = out / CHECKPOINT_NAME
    targets = dataset.targets(np.float64)
    # every output (echo, loss log, events, checkpoints) appears in ``out`` only once training completes
    with staged_dir(out) as stage:
        write_resolved(cfg, stage)
        with telemetry(stage, args.verbose) as emitter, use_run(run_id(tcfg.seed, state.config_hash), "train"):
            emitter.emit_run("start", arch=cfg.arch, epochs=tcfg.epochs, params=state.param_count(), items=len(dataset))
            with (stage / LOSS_LOG_NAME).open("w", newline="", encoding="utf-8") as fh:
                log = csv.writer(fh, lineterminator="\n")
                log.writerow(LOSS_LOG_HEADER)
                while state.epoch < tcfg.epochs:
                    start = now_ns()
                    state, loss = train_epoch(state, targets)
                    row = loss.as_row()
                    log.writerow([state.epoch, *(repr(row[k]) for k in LOSS_LOG_HEADER[1:])])
                    fh.flush()
                    emitter.emit_epoch(state.epoch, row, now_ns() - start)
                    if cfg.checkpoint_every and state.epoch % cfg.checkpoint_every == 0 and state.epoch < tcfg.epochs:
                        save_checkpoint(state, stage / CHECKPOINT_NAME)
                        emitter.emit_ckpt(str(ckpt), state.epoch)
            save_checkpoint(state, stage / CHECKPOINT_NAME)
            emitter.emit_ckpt(str(ckpt), state.epoch)
            emitter.emit_run("end", epoch=state.epoch)
    print(ckpt)
    return EXIT_OK


def _synth_wave(args: argparse.Namespace, states: Sequence[TrainState]) -> Waveform:
    state = states[0]
    samples = args.samples if args.samples is not None else state.sample_count
    item = _item(args.item)
    if args.latent_file:
        return synthesize(state, load_latent(args.latent_file), samples, args.fraction)
    if args.mix_with is not None:
        return interpolate_latents(state, item, _item(args.mix_with), args.mix, samples)
    if len(states) > 1:
        return ensemble_synthesize(states, item, samples)
    return synthesize(state, item, samples, args.fraction)


def cmd_synth(args: argparse.Namespace) -> int:
    paths = ([args.checkpoint] if args.checkpoint else []) + _split(args.ensemble)
    if not paths:
        raise ConfigError("synth needs a checkpoint or --ensemble ckpt1,ckpt2")
    if args.ensemble and len(paths) < 2:  # noqa: PLR2004
        raise ConfigError("--ensemble needs at least two checkpoints in total")
    states = [load_checkpoint(p) for p in paths]
    out = Path(args.out or "synth.wav")
    with telemetry(out.parent, args.verbose) as emitter, use_run(run_id(states[0].config.seed, states[0].config_hash), "synth"):
        wave = timed(emitter, "synthesize")(_synth_wave)(args, states)
        check_finite("synthesized waveform", wave.samples)
        with atomic_outputs() as outs:
            write_wav(wave, outs.path(out))
            _echo(
                outs.path(out.parent / _echo_name("synth")),
                {
                    "command": "synth",
                    "checkpoints": paths,
                    "checkpoint_config": states[0].config.to_dict(),
                    "item": args.item,
                    "samples": len(wave),
                    "fraction": args.fraction,
                    "latent_file": args.latent_file,
                    "mix_with": args.mix_with,
                    "mix": args.mix,
                    "out": str(out),
                },
            )
    print(out)
    return EXIT_OK


def cmd_encode(args: argparse.Namespace) -> int:
    state = load_checkpoint(args.checkpoint)
    state.require_pcinr("encode")
    wav = read_wav(args.wav)
    if len(wav) != state.sample_count:
        warnings.warn(
            f"{args.wav}: {len(wav)} samples truncated or zero-padded to {state.sample_count}", UserWarning, stacklevel=2
        )
    samples = fit_length(wav.samples, state.sample_count)
    out = Path(args.out or "latent.pclt")
    with telemetry(out.parent, args.verbose) as emitter, use_run(run_id(state.config.seed, state.config_hash), "encode"):
        z = timed(emitter, "encode_unseen")(encode_unseen)(state, samples, args.steps, args.lr, seed=args.seed)
        final = latent_loss(state, z, samples)
        emitter.emit_run("end", steps=args.steps, **final.as_row())
        with atomic_outputs() as outs:
            save_latent(z, outs.path(out))
            _echo(
                outs.path(out.parent / _echo_name("encode")),
                {
                    "command": "encode",
                    "checkpoint": args.checkpoint,
                    "checkpoint_config": state.config.to_dict(),
                    "wav": args.wav,
                    "steps": args.steps,
                    "lr": args.lr,
                    "seed": args.seed if args.seed is not None else state.config.seed,
                    "final_loss": final.as_row(),
                    "out": str(out),
                },
            )
    print(out)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    paths = ([args.checkpoint] if args.checkpoint else []) + _split(args.runs)
    if not paths:
        raise ConfigError("eval needs a checkpoint or --runs ckptA,ckptB,...")
    if not args.dataset:
        raise ConfigError("eval needs --dataset")
    states = [load_checkpoint(p) for p in paths]
    dataset = load_dataset(
        args.dataset,
        sample_count=states[0].sample_count,
        sample_rate=states[0].sample_rate,
        allow_rate_mismatch=args.resample_off,
    )
    out = Path(args.out or "eval")
    with staged_dir(out) as stage:
        with telemetry(stage, args.verbose) as emitter, use_run(run_id(states[0].config.seed, states[0].config_hash), "eval"):
            report = timed(emitter, "evaluate_runs")(evaluate_runs)(
                states,
                dataset,
                strict=args.strict,
                references=not args.no_references,
                on_item=lambda row: emitter.emit_eval(row.item_id, {m: row.value(m) for m in ("mse", "snr_db", "lsd", "multi_stft_mse")}),
            )
            write_report(report, stage / "report.csv", stage / "summary.txt")
        _echo(stage / RESOLVED_NAME, {"command": "eval", "checkpoints": paths, "dataset": args.dataset, "strict": args.strict})
    print(out / "report.csv")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    extra: dict[str, Any] = {
        "dataset": args.dataset,
        "out": args.out,
        "sample_count": args.samples,
        "sweep_candidates": args.candidates,
        "sweep_rungs": [int(r) for r in _split(args.rungs)] or None,
    }
    cfg = _resolve(args, **extra)
    if cfg.train_config().family != "pcinr":
        raise ConfigError("sweep searches pcinr activation scaling; --arch tcnn is not supported")
    out = Path(cfg.out)
    if args.objective == "stub":
        objective: Any = stub_objective
    else:
        if not cfg.dataset:
            raise ConfigError("sweep needs --dataset (or use --objective stub)")
        dataset = load_dataset(
            cfg.dataset, sample_count=cfg.sample_count, sample_rate=cfg.sample_rate, allow_rate_mismatch=cfg.allow_rate_mismatch
        )
        objective = TrainingObjective(cfg.train_config(), dataset)
    tcfg = cfg.train_config()
    with staged_dir(out) as stage:
        write_resolved(cfg, stage)
        with telemetry(stage, args.verbose) as emitter, use_run(run_id(tcfg.seed, config_hash(tcfg)), "sweep"):
            result = timed(emitter, "successive_halving")(successive_halving)(
                cfg.sweep_space(), objective, cfg.seed, emitter=emitter
            )
        write_leaderboard(result, stage / "leaderboard.csv", seed=cfg.seed, extra=[f"objective: {args.objective}"])
        (stage / "best.json").write_text(json.dumps(best_dict(result), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    best = result.best
    print(f"best omega0_first={best.omega0_first:.6g} omega0_hidden={best.omega0_hidden:.6g} mse={result.best_mse:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--arch", choices=["pcinr", "pcinr_wide", "pcinr_wr", "tcnn"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--lambda-wr", dest="lambda_wr", type=float)
    p.add_argument("--optimizer", choices=["adabelief", "adam"])
    p.add_argument("--samples", type=int)
    p.add_argument("--verbose", action="store_true", help="echo telemetry events on stderr")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = argparse.ArgumentParser(prog="pcinr", description="Conditional sine-network audio synthesis.")
    p.add_argument("--version", action="version", version=f"pcinr {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen-dataset", parents=[common], help="render a synthetic tone set")
    g.add_argument("spec", help=f"dataset spec file or bundled name ({', '.join(BUNDLED)})")
    g.set_defaults(func=cmd_gen_dataset)

    t = sub.add_parser("train", parents=[common], help="train a model on a dataset manifest")
    t.add_argument("--dataset", help="manifest.csv")
    t.add_argument("--batch-items", dest="batch_items", type=int)
    t.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    t.add_argument("--resample-off", action="store_true", help="accept items whose sample rate differs")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("synth", parents=[common], help="synthesize a WAV from a checkpoint")
    s.add_argument("checkpoint", nargs="?")
    s.add_argument("--item", default="0", help="item index or item_id")
    s.add_argument("--latent-file", dest="latent_file")
    s.add_argument("--fraction", type=float, default=1.0, help="share of the coordinate span to render")
    s.add_argument("--ensemble", help="comma-separated extra checkpoints to average")
    s.add_argument("--mix-with", dest="mix_with", help="second item for latent interpolation")
    s.add_argument("--mix", type=float, default=0.5, help="interpolation weight of --mix-with")
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("encode", parents=[common], help="fit a latent code to an unseen WAV")
    e.add_argument("checkpoint")
    e.add_argument("wav")
    e.add_argument("--steps", type=int, default=500)
    e.add_argument("--lr", type=float, default=1e-2)
    e.set_defaults(func=cmd_encode)

    v = sub.add_parser("eval", parents=[common], help="score checkpoints against a dataset")
    v.add_argument("checkpoint", nargs="?")
    v.add_argument("--runs", help="comma-separated checkpoints of independent runs")
    v.add_argument("--dataset", help="manifest.csv")
    v.add_argument("--strict", action="store_true", help="fail on dataset hash mismatch")
    v.add_argument("--no-references", dest="no_references", action="store_true")
    v.add_argument("--resample-off", action="store_true")
    v.set_defaults(func=cmd_eval)

    w = sub.add_parser("sweep", parents=[common], help="search omega0_first / omega0_hidden")
    w.add_argument("--dataset", help="manifest.csv")
    w.add_argument("--candidates", type=int)
    w.add_argument("--rungs", help="comma-separated epoch budgets, e.g. 25,50,100,200")
    w.add_argument("--objective", choices=["train", "stub"], default="train")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except PcinrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
