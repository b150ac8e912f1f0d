"""``gastnet`` command-line driver.

Every subcommand accepts ``--config PATH`` and ``--seed N``; any other
``--key value`` pair overrides the matching configuration key.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..corpus import relation_distribution, write_conllu
from ..corpus.conllu import read_conllu
from ..kvconfig import ConfigError
from .checkpoint import load_checkpoint
from .config import ExperimentConfig, parse_overrides
from .diagnostics import pipeline_grad_check
from .experiments import StudyError, ablation_table, export_embeddings, ratio_table, run_ablation_matrix, sample_ratio_study
from .train import evaluate, load_splits, train


def _config(args, extra) -> ExperimentConfig:
    overrides = parse_overrides(extra)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    return ExperimentConfig.load(args.config, overrides)


def cmd_train(args, cfg):
    out = Path(args.out or cfg.output_dir)
    report, _ = train(cfg, out_dir=out)
    print(f"best epoch {report.best_epoch}  val {report.best_val_acc:.4f}  target test {report.target_test_acc:.4f}")
    print(f"wrote {out / 'report.json'} and {out / 'checkpoint'}")


def cmd_eval(args, cfg):
    model, saved = load_checkpoint(args.checkpoint)
    # corpus settings come from the checkpoint unless the command line overrides them
    base = saved if args.config is None else cfg
    base = ExperimentConfig.from_mapping(parse_overrides(args.extra), base=base) if args.extra else base
    splits = load_splits(base)
    acc = evaluate(model, splits.split(args.split))
    print(f"{args.split} accuracy {acc:.6f}")


def cmd_ablate(args, cfg):
    reports = run_ablation_matrix(cfg, csv_path=args.csv)
    sys.stdout.write(ablation_table(reports))


def cmd_ratio(args, cfg):
    try:
        ratios = [float(r) for r in args.ratios.split(",") if r.strip()]
    except ValueError:
        raise StudyError(f"bad ratio list {args.ratios!r}") from None
    points = sample_ratio_study(cfg, ratios, csv_path=args.csv)
    sys.stdout.write(ratio_table(points))


def cmd_synth(args, cfg):
    splits = load_splits(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in splits.names():
        write_conllu(out / f"{name}.conllu", splits.split(name))
        print(f"{name}: {len(splits.split(name))} sentences")


def cmd_stats(args, cfg):
    if args.files:
        groups = {Path(f).stem: read_conllu(f) for f in args.files}
    else:
        splits = load_splits(cfg)
        groups = {}
        for name in splits.names():
            dom = splits.source_domain if splits.domain_of(name) == 0 else splits.target_domain
            groups.setdefault(dom, []).extend(splits.split(name))
    dists = {k: relation_distribution(v) for k, v in groups.items()}
    rels = sorted(set().union(*dists.values()))
    lines = [",".join(["relation", *dists])]
    for r in rels:
        lines.append(",".join([r, *(f"{d.get(r, 0.0):.4f}" for d in dists.values())]))
    text = "\n".join(lines) + "\n"
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_export(args, cfg):
    model, saved = load_checkpoint(args.checkpoint)
    base = saved if args.config is None else cfg
    names = [n for n in args.splits.split(",") if n] if args.splits else None
    n = export_embeddings(model, load_splits(base), args.out, names)
    print(f"wrote {n} records to {args.out}")


def cmd_gradcheck(args, cfg):
    res = pipeline_grad_check(seed=cfg.seed)
    status = "ok" if res.max_rel_error <= args.tol else "FAILED"
    print(f"max relative error {res.max_rel_error:.3e} over {res.n_parameters} parameters: {status}")
    return 0 if status == "ok" else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gastnet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", default=None, help="key = value configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.set_defaults(func=func)
        return p

    p = add("train", cmd_train, "train one model and write report + checkpoint")
    p.add_argument("--out", default=None, help="run directory (default: output_dir key)")
    p = add("eval", cmd_eval, "evaluate a checkpoint on a labeled split")
    p.add_argument("checkpoint")
    p.add_argument("--split", default="test")
    p = add("ablate", cmd_ablate, "train all six ablation variants")
    p.add_argument("--csv", default=None)
    p = add("ratio-study", cmd_ratio, "vary the labeled source fraction")
    p.add_argument("--ratios", default="0.1,0.4,0.8,1.0")
    p.add_argument("--csv", default=None)
    p = add("synth", cmd_synth, "write the synthetic corpus as CoNLL-U files")
    p.add_argument("--out", required=True)
    p = add("stats", cmd_stats, "relation distribution per domain (percent)")
    p.add_argument("--files", nargs="+", default=None, help="CoNLL-U files, one column each; default: the configured corpus")
    p.add_argument("--csv", default=None)
    p = add("export-emb", cmd_export, "dump pooled sentence features as TSV")
    p.add_argument("checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--splits", default=None, help="comma-separated split names")
    p = add("grad-check", cmd_gradcheck, "finite-difference check of the full pipeline")
    p.add_argument("--tol", type=float, default=1e-4)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    args.extra = extra
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args, extra)
        code = args.func(args, cfg)
    except (ConfigError, StudyError, ValueError, OSError) as exc:
        print(f"gastnet {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
