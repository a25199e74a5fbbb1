#!/usr/bin/env python3
# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

"""Command-line entry point of the HEDGE pipeline."""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from jinja2 import Template
from pydantic import BaseModel, ValidationError

from baselines import generate_baseline
from config import DiffusionSettings, RunConfig, config_hash, load_run_config
from constants import (
    ABLATION_VARIANTS,
    CHECKPOINT_FILE,
    DIFFUSION_FILE,
    REGIME_KINDS,
    TRAIN_LOG_FILE,
    TRAIN_REPORT_FILE,
    VERSION,
)
from datasets import load_incidence, read_batch, sample_subhypergraphs, synth_regime, write_batch
from drift_net import load_checkpoint, save_checkpoint
from forward import DiffusionConfig
from incidence import IncidenceLike
from metrics import MetricReport, evaluate
from sampler import GeneratedBatch, generate, threshold_sweep
from trainer import batch_density, check_dataset, train
from utils import HedgeError
from validation import run_validation

logger = logging.getLogger(__name__)

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"
ABLATION_METRICS = [
    "delta_rho",
    "delta_k",
    "delta_e",
    "w1_degree",
    "w1_size",
    "node_spec_wd",
    "edge_spec_wd",
    "tail_gap",
    "intersection_wd",
    "feature_mmd",
]
SWEEP_THRESHOLDS = [0.1, 0.3, 0.7, 0.9]


class DiffusionRecord(BaseModel):
    """Forward-process parameters a trained model was fitted with."""

    shape: Tuple[int, int]
    density: float
    settings: DiffusionSettings
    seed: int
    config_hash: str
    version: str = VERSION


def build_diffusion(
    settings: DiffusionSettings,
    shape: Tuple[int, int],
    density: float,
    variant: Optional[str] = None,
) -> DiffusionConfig:
    """Forward-process configuration for a batch of the given shape and density."""
    return DiffusionConfig.from_density(
        shape,
        density,
        gamma=settings.gamma,
        tau=settings.tau,
        horizon=settings.horizon,
        schedule_kind=settings.schedule_kind,
        quad_points=settings.quad_points,
        variant=variant if variant is not None else settings.variant,
        base_mean=settings.base_mean,
    )


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _emit(payload: dict, out: Optional[str]) -> None:
    if out is None:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        _write_json(Path(out), payload)
        logger.info(f"Wrote {out}")


def _generated_fields(batch: GeneratedBatch, steps: int) -> dict:
    """Manifest diagnostics of a generated batch."""
    saturation = np.asarray(batch.saturation) if batch.saturation else np.zeros(1)
    changes: Dict[str, List[float]] = {str(t): [] for t in SWEEP_THRESHOLDS}
    for relaxed in batch.relaxed:
        if relaxed is None:
            continue
        for threshold, changed in threshold_sweep(relaxed, SWEEP_THRESHOLDS).items():
            changes[str(threshold)].append(changed)
    return {
        "steps": steps,
        "saturation": {"mean": float(saturation.mean()), "min": float(saturation.min())},
        "threshold_sweep": {k: float(np.mean(v)) if v else 0.0 for k, v in changes.items()},
        "failures": [{"sample": f.sample, "step": f.step} for f in batch.failures],
        "empty_hyperedges": {str(k): v for k, v in batch.empty_hyperedges.items()},
    }


def cmd_train(args: argparse.Namespace, run: RunConfig) -> int:
    """Fit the drift network on a batch directory."""
    data, _ = read_batch(args.data, strict=True)
    matrices = check_dataset(data)
    density = batch_density(matrices)
    diffusion = build_diffusion(run.diffusion, matrices[0].shape, density)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(run)
    net, report = train(matrices, run.train, diffusion, log_path=out / TRAIN_LOG_FILE)
    report.config_hash = digest
    save_checkpoint(net, out / CHECKPOINT_FILE)
    record = DiffusionRecord(
        shape=matrices[0].shape,
        density=density,
        settings=run.diffusion,
        seed=run.seed,
        config_hash=digest,
    )
    (out / DIFFUSION_FILE).write_text(record.json(indent=2, sort_keys=True))
    (out / TRAIN_REPORT_FILE).write_text(report.json(indent=2, sort_keys=True))
    return 0


def cmd_generate(args: argparse.Namespace, run: RunConfig) -> int:
    """Generate a batch from a trained model directory."""
    model = Path(args.model)
    record = DiffusionRecord.parse_raw((model / DIFFUSION_FILE).read_text())
    diffusion = build_diffusion(record.settings, record.shape, record.density)
    net = load_checkpoint(model / CHECKPOINT_FILE, diffusion.horizon)
    sample = run.sample.copy(update={"count": args.count or run.sample.count})
    batch = generate(net, diffusion, sample)
    write_batch(
        args.out,
        batch.entries,
        "hedge",
        sample.seed,
        config_hash=config_hash(run),
        **_generated_fields(batch, sample.steps),
    )
    return 0


def cmd_evaluate(args: argparse.Namespace, run: RunConfig) -> int:
    """Compare two batch directories."""
    real, _ = read_batch(args.real)
    gen, _ = read_batch(args.gen)
    report = evaluate(real, gen, run.metrics.spectral_k)
    report.seed = run.seed
    report.config_hash = config_hash(run)
    _emit(json.loads(report.json()), args.out)
    return 0


def cmd_baseline(args: argparse.Namespace, run: RunConfig) -> int:
    """Generate a comparator batch from a reference batch directory."""
    reference, _ = read_batch(args.reference)
    cfg = run.baseline if args.kind is None else run.baseline.copy(update={"kind": args.kind})
    batch = generate_baseline(reference, cfg)
    write_batch(
        args.out,
        batch.entries,
        cfg.kind,
        cfg.seed,
        config_hash=config_hash(run),
        warnings=batch.warnings,
    )
    return 0


def cmd_subsample(args: argparse.Namespace, run: RunConfig) -> int:
    """Draw fixed-size subhypergraphs from one large incidence file."""
    h_full = load_incidence(args.source)
    batch = sample_subhypergraphs(h_full, run.subsample)
    write_batch(args.out, batch, "subsample", run.subsample.seed, config_hash=config_hash(run))
    return 0


def cmd_synth(args: argparse.Namespace, run: RunConfig) -> int:
    """Generate a synthetic regime batch."""
    cfg = run.regime if args.kind is None else run.regime.copy(update={"kind": args.kind})
    batch = synth_regime(cfg)
    write_batch(args.out, batch, cfg.kind, cfg.seed, config_hash=config_hash(run))
    return 0


def cmd_validate(args: argparse.Namespace, run: RunConfig) -> int:
    """Run the numerical certification harness; exit 1 on any failing check."""
    report = run_validation(run.seed, fast=args.fast)
    report.config_hash = config_hash(run)
    payload = json.loads(report.json())
    payload["passed"] = report.passed
    payload["out_of_band"] = report.out_of_band
    _emit(payload, args.out)
    for name in report.out_of_band:
        logger.warning(f"Check {name} passed outside its expected band")
    if not report.passed:
        logger.error(f"Validation failed: {', '.join(report.failed)}")
        return 1
    return 0


def ablation_run(
    run: RunConfig, real: Sequence[IncidenceLike], variant: str
) -> MetricReport:
    """Train and sample one operator variant on a batch, then evaluate against it."""
    matrices = check_dataset(real)
    diffusion = build_diffusion(run.diffusion, matrices[0].shape, batch_density(matrices), variant)
    net, _ = train(matrices, run.train, diffusion)
    batch = generate(net, diffusion, run.sample)
    return evaluate(real, batch.succeeded, run.metrics.spectral_k)


def summarize_ablation(
    reports: Dict[str, List[MetricReport]]
) -> List[Dict[str, object]]:
    """Mean and standard error over seeds of every metric, per variant."""
    rows = []
    for variant, per_seed in reports.items():
        cells = []
        for metric in ABLATION_METRICS:
            values = np.array([getattr(r, metric) for r in per_seed], dtype=np.float64)
            se = values.std(ddof=1) / np.sqrt(len(values)) if len(values) > 1 else 0.0
            cells.append({"metric": metric, "mean": float(values.mean()), "se": float(se)})
        rows.append({"variant": variant, "cells": cells})
    return rows


def render_ablation(rows: List[Dict[str, object]]) -> str:
    """Render the ablation table as CSV."""
    with open(TEMPLATES_DIR / "ablation.csv.j2", "r") as file:
        template = Template(file.read())
    return template.render(metrics=ABLATION_METRICS, rows=rows)


def cmd_ablate(args: argparse.Namespace, run: RunConfig) -> int:
    """Compare the operator variants on a synthetic regime over several seeds.

    Per seed every variant trains from the same data and the same initial
    parameters, so the variants differ only in the masked operator terms.
    """
    variants = args.variants or ABLATION_VARIANTS
    reports: Dict[str, List[MetricReport]] = {variant: [] for variant in variants}
    for offset in range(args.seeds):
        seeded = run.copy(
            update={
                "regime": run.regime.copy(
                    update={"kind": args.regime, "seed": run.regime.seed + offset}
                ),
                "train": run.train.copy(update={"seed": run.train.seed + offset}),
                "sample": run.sample.copy(update={"seed": run.sample.seed + offset}),
            }
        )
        real = synth_regime(seeded.regime)
        for variant in variants:
            logger.info(f"Ablation seed {offset}: variant {variant}")
            reports[variant].append(ablation_run(seeded, real, variant))
    rows = summarize_ablation(reports)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.csv").write_text(render_ablation(rows))
    _write_json(
        out / "ablation.json",
        {
            "regime": args.regime,
            "seeds": args.seeds,
            "rows": rows,
            "runs": {v: [json.loads(r.json()) for r in rs] for v, rs in reports.items()},
            "seed": run.seed,
            "config_hash": config_hash(run),
            "version": VERSION,
        },
    )
    logger.info(f"Wrote ablation table to {out}")
    return 0


def _apply_seed(run: RunConfig, seed: Optional[int]) -> RunConfig:
    """Route a --seed override to the root seed and every section seed."""
    if seed is None:
        return run
    sections = {
        name: getattr(run, name).copy(update={"seed": seed})
        for name in ("train", "sample", "baseline", "regime", "subsample")
    }
    return run.copy(update={"seed": seed, **sections})


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per pipeline stage."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run config (defaults for missing keys)")
    common.add_argument("--seed", type=int, help="root seed, overriding every section seed")
    common.add_argument(
        "--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"]
    )
    parser = argparse.ArgumentParser(prog="hedge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="fit the reverse drift")
    p.add_argument("data", help="batch directory of training hypergraphs")
    p.add_argument("--out", required=True, help="model directory")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("generate", parents=[common], help="sample a batch from a model")
    p.add_argument("--model", required=True, help="model directory written by train")
    p.add_argument("--count", type=int, help="number of samples")
    p.add_argument("--out", required=True, help="output batch directory")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("evaluate", parents=[common], help="compare two batches")
    p.add_argument("real", help="reference batch directory")
    p.add_argument("gen", help="generated batch directory")
    p.add_argument("--out", help="report file (stdout when omitted)")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("baseline", parents=[common], help="run a statistical comparator")
    p.add_argument("reference", help="reference batch directory")
    p.add_argument("--kind", choices=["er_hg", "hcm_mcmc"])
    p.add_argument("--out", required=True, help="output batch directory")
    p.set_defaults(handler=cmd_baseline)

    p = sub.add_parser("subsample", parents=[common], help="subsample a large hypergraph")
    p.add_argument("source", help="incidence file")
    p.add_argument("--out", required=True, help="output batch directory")
    p.set_defaults(handler=cmd_subsample)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic regime")
    p.add_argument("--kind", choices=REGIME_KINDS)
    p.add_argument("--out", required=True, help="output batch directory")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("validate", parents=[common], help="certify the numerical properties")
    p.add_argument("--fast", action="store_true", help="smaller Monte Carlo sizes")
    p.add_argument("--out", help="report file (stdout when omitted)")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("ablate", parents=[common], help="operator-variant ablation")
    p.add_argument("--regime", choices=REGIME_KINDS, default="overlapping_blocks")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--variants", nargs="+", choices=ABLATION_VARIANTS)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_ablate)
    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the subcommand and return its exit status.

    Usage errors exit 2 through argparse; runtime failures return 1.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    try:
        run = _apply_seed(load_run_config(args.config), args.seed)
        return args.handler(args, run)
    except (HedgeError, OSError, ValidationError, ValueError) as e:
        logger.error(f"hedge {args.command} failed: {e}")
        return 1


def main() -> None:
    """Console-script entry point."""
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
