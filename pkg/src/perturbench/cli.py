"""Command-line pipeline: generate suites, train/evaluate the bundled
classifier, summarize external predictions, analyze runs, render plots.

Exit codes: 0 success, 1 runtime or data error, 2 usage error. Every command
is idempotent: identical flags and inputs give byte-identical outputs. The
default master seed is 0, overridable by ``--seed`` or the optional
``PERTURBENCH_SEED`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import SPEC_VERSION
from .errors import PerturbenchError, StructureError
from .mcvplot import McvPoint, PlotStyle, render_mcv
from .raster import LabeledDataset, SeedSpec, SynthSpec, load_cifar10_batch, sample_indices, synth_dataset
from .report import (
    ClassifierRun,
    accuracies_from_records,
    aggregate,
    aggregate_to_json,
    column_correlations,
    ingest_predictions,
    load_summary,
    summarize,
    summary_to_json,
    write_predictions_csv,
)
from .stats import ReferencePoint
from .suite import check_disjoint, generate_suite, load_alias_map, load_manifest, verify_suite
from . import baseline


class UsageError(Exception):
    """Bad flag combination or value; maps to exit code 2."""


def _default_seed() -> int:
    env = os.environ.get("PERTURBENCH_SEED")
    return int(env) if env else 0


def _resolve_seed(args: argparse.Namespace) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _write_json(doc: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_source(args: argparse.Namespace, needed: int, seed: int) -> tuple[LabeledDataset, str]:
    """Dataset pool plus its identity string, from --synthetic or --cifar."""
    if args.cifar is not None:
        pool = load_cifar10_batch(args.cifar)
        return pool, f"cifar10:{Path(args.cifar).name}:records={len(pool)}"
    pool_n = args.pool if args.pool is not None else needed
    if pool_n < needed:
        raise UsageError(f"--pool {pool_n} is smaller than the {needed} images required")
    spec = SynthSpec()
    return synth_dataset(spec, pool_n, seed), spec.dataset_id(pool_n, seed)


def cmd_generate(args: argparse.Namespace) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    seed = _resolve_seed(args)
    pool, dataset_id = _load_source(args, args.skip + args.n, seed)
    indices = sample_indices(len(pool), args.n, SeedSpec(seed), skip=args.skip)
    aliases = load_alias_map(args.alias_map) if args.alias_map else None
    manifest = generate_suite(
        pool.subset(indices),
        master_seed=seed,
        images_per_group=args.n,
        out_dir=args.out,
        dataset_id=dataset_id,
        source_indices=indices,
        workers=args.workers,
        aliases=aliases,
    )
    print(f"wrote {len(manifest.groups)} groups to {args.out}/manifest.json")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    seed = _resolve_seed(args)
    pool, dataset_id = _load_source(args, args.skip + args.n, seed)
    indices = sample_indices(len(pool), args.n, SeedSpec(seed), skip=args.skip)
    base = pool.subset(indices)
    train_set = baseline.make_training_set(base, args.train_group, seed)
    cfg = baseline.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, l2=args.l2,
        batch_size=args.batch, seed=seed,
    )
    model = baseline.train(train_set, cfg)
    out = Path(args.out)
    baseline.save_model(model, out)
    meta = {
        "spec_version": SPEC_VERSION,
        "classifier_name": args.name,
        "training_group": args.train_group,
        "source": {"dataset_id": dataset_id, "indices": indices},
        "config": {
            "seed": seed, "skip": args.skip, "n": args.n,
            "learning_rate": args.lr, "epochs": args.epochs,
            "l2": args.l2, "batch_size": args.batch,
        },
    }
    _write_json(meta, out.with_name(out.name + ".meta.json"))
    print(f"wrote model to {out}")
    return 0


def _model_meta(model_path: Path) -> dict | None:
    meta_path = model_path.with_name(model_path.name + ".meta.json")
    if not meta_path.is_file():
        return None
    with open(meta_path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def cmd_evaluate(args: argparse.Namespace) -> int:
    model_path = Path(args.model)
    model = baseline.load_model(model_path)
    manifest = load_manifest(Path(args.suite) / "manifest.json")
    if args.verify:
        problems = verify_suite(manifest, args.suite)
        if problems:
            for gid, msg in problems:
                print(f"group {gid}: {msg}", file=sys.stderr)
            raise StructureError(f"suite verification failed for {len(problems)} group(s)")

    meta = _model_meta(model_path)
    name = args.name or (meta or {}).get("classifier_name", "softmax")
    train_group = args.train_group or (meta or {}).get("training_group", "clean")
    if meta and "source" in meta:
        check_disjoint(
            meta["source"]["dataset_id"], meta["source"]["indices"],
            manifest.source.dataset_id, manifest.source.indices,
        )

    accuracies, records = baseline.evaluate_suite(model, manifest, args.suite)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_predictions_csv(records, out_dir / "predictions.csv")

    ref = None
    if args.reference:
        ref_summary = load_summary(args.reference)
        ref = ReferencePoint(rMA=ref_summary.mean_accu, rCV=ref_summary.cv)
    run = ClassifierRun(classifier_name=name, training_group=train_group, accuracies=accuracies)
    summary = summarize(run, ref)
    doc = summary_to_json(summary)
    doc["accuracies"] = {str(g): accuracies[g] for g in sorted(accuracies)}
    doc["reference"] = {
        "rMA": ref.rMA if ref else summary.mean_accu,
        "rCV": ref.rCV if ref else summary.cv,
    }
    doc["config"] = {
        "model": str(args.model), "suite": str(args.suite),
        "reference": args.reference, "verify": bool(args.verify),
    }
    _write_json(doc, out_dir / "summary.json")
    print(f"evaluated {len(accuracies)} groups; mean accuracy "
          f"{summary.mean_accu:.2f}%, CV {summary.cv:.2f}% -> {summary.quadrant.value}")
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    records = ingest_predictions(args.predictions)
    accuracies = accuracies_from_records(records)
    ref = None
    if args.reference:
        ref_summary = load_summary(args.reference)
        ref = ReferencePoint(rMA=ref_summary.mean_accu, rCV=ref_summary.cv)
    run = ClassifierRun(
        classifier_name=args.name, training_group=args.train_group, accuracies=accuracies
    )
    summary = summarize(run, ref)
    doc = summary_to_json(summary)
    doc["accuracies"] = {str(g): accuracies[g] for g in sorted(accuracies)}
    doc["config"] = {
        "predictions": str(args.predictions), "name": args.name,
        "train_group": args.train_group, "reference": args.reference,
    }
    _write_json(doc, Path(args.out))
    print(f"wrote summary for {summary.label} to {args.out}")
    return 0


def _csv_field(value: object) -> str:
    return f"{value:.6f}" if isinstance(value, float) else str(value)


def cmd_analyze(args: argparse.Namespace) -> int:
    summaries = [load_summary(p) for p in args.summaries]
    agg = aggregate(summaries)
    corr = column_correlations(summaries)
    doc = {
        "spec_version": SPEC_VERSION,
        "summaries": [summary_to_json(s) for s in summaries],
        "aggregate": aggregate_to_json(agg),
        "correlations": None if corr is None else {
            key: {"pearson": pair.pearson, "spearman": pair.spearman}
            for key, pair in sorted(corr.items())
        },
        "config": {"inputs": [str(p) for p in args.summaries], "format": args.format},
    }
    out = Path(args.out)
    _write_json(doc, out)
    if args.format == "csv":
        cols = ("classifier_name", "training_group", "training_category",
                "mean_accu", "cv", "clean_accu", "min_accu", "max_accu", "quadrant")
        csv_path = out.with_suffix(".csv")
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            for s in summaries:
                row = summary_to_json(s)
                fh.write(",".join(_csv_field(row[c]) for c in cols) + "\n")
        print(f"wrote {out} and {csv_path}")
    else:
        print(f"wrote {out}")
    return 0


def _parse_range(text: str | None) -> tuple[float, float] | None:
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"range must be 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def cmd_plot(args: argparse.Namespace) -> int:
    summaries = [load_summary(p) for p in args.summaries]
    labels = [s.label for s in summaries]
    if args.reference not in labels:
        raise UsageError(
            f"reference {args.reference!r} not among inputs: {', '.join(labels)}"
        )
    points = [
        McvPoint(
            label=s.label, cv=s.cv, mean_accu=s.mean_accu,
            min_accu=s.min_accu, max_accu=s.max_accu, clean_accu=s.clean_accu,
            is_reference=(s.label == args.reference),
        )
        for s in summaries
    ]
    style = PlotStyle(
        width=args.width, height=args.height,
        x_range=_parse_range(args.fixed_x), y_range=_parse_range(args.fixed_y),
        show_whiskers=not args.no_whiskers,
        show_clean_ring=not args.no_clean_ring,
        title=args.title,
    )
    svg = render_mcv(points, style)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perturbench",
        description="Two-factor corruption benchmark generator and robustness harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_source(p: argparse.ArgumentParser) -> None:
        grp = p.add_mutually_exclusive_group(required=True)
        grp.add_argument("--synthetic", action="store_true", help="use the built-in shape dataset")
        grp.add_argument("--cifar", metavar="PATH", help="CIFAR-10 binary batch file")
        p.add_argument("--pool", type=int, default=None,
                       help="synthetic pool size (default: just enough for skip+n)")
        p.add_argument("--skip", type=int, default=0,
                       help="offset into the seeded sampling shuffle")
        p.add_argument("--seed", type=int, default=None, help="master seed")

    p = sub.add_parser("generate", help="write the 69-group corruption suite")
    add_source(p)
    p.add_argument("--n", type=int, required=True, help="images per group")
    p.add_argument("--workers", type=int, default=1, help="parallel group workers")
    p.add_argument("--alias-map", metavar="PATH", default=None,
                   help="JSON map of group id to external numbering label")
    p.add_argument("--out", required=True, help="output suite directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the bundled softmax classifier")
    add_source(p)
    p.add_argument("--n", type=int, default=500, help="training images")
    p.add_argument("--train-group", default="clean",
                   help="corruption chain applied to the training set, e.g. SP0.1RL30")
    p.add_argument("--name", default="softmax", help="classifier name for reports")
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--batch", type=int, default=50)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model on every suite group")
    p.add_argument("--model", required=True)
    p.add_argument("--suite", required=True, help="suite directory with manifest.json")
    p.add_argument("--reference", default=None,
                   help="summary JSON of the clean-trained reference run")
    p.add_argument("--name", default=None, help="override classifier name")
    p.add_argument("--train-group", default=None, help="override training group name")
    p.add_argument("--verify", action="store_true", help="check suite digests first")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("summarize", help="summarize an external predictions CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("--name", required=True, help="classifier name")
    p.add_argument("--train-group", required=True)
    p.add_argument("--reference", default=None)
    p.add_argument("--out", required=True, help="summary JSON to write")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("analyze", help="aggregate runs and correlate their columns")
    p.add_argument("summaries", nargs="+", help="summary JSON files")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", required=True, help="report JSON to write")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plot", help="render runs as an SVG robustness chart")
    p.add_argument("summaries", nargs="+", help="summary JSON files")
    p.add_argument("--reference", required=True,
                   help="label of the reference run, e.g. 'softmax(clean)'")
    p.add_argument("--width", type=int, default=800)
    p.add_argument("--height", type=int, default=560)
    p.add_argument("--fixed-x", default=None, metavar="LO,HI")
    p.add_argument("--fixed-y", default=None, metavar="LO,HI")
    p.add_argument("--no-whiskers", action="store_true")
    p.add_argument("--no-clean-ring", action="store_true")
    p.add_argument("--title", default="")
    p.add_argument("--out", required=True, help="SVG file to write")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PerturbenchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
