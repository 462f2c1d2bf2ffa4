"""Command-line entry point: train, evaluate, predict, split, explain, kg-query."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..datasets import (
    clustering_pair_split,
    cold_pair_split,
    load_complexes,
    random_split,
    read_manifest,
    write_manifest,
)
from ..errors import AffinityError
from ..fusion import explain_text
from ..kg import TAIL_TYPES, format_ranking, ingest_triples
from .checkpoint import Checkpoint
from .config import RunConfig, load_config
from .training import evaluate_checkpoint, explain_kg, explain_sample, predict, train

PROTOCOLS = ("random", "cluster", "cold")


def make_split(protocol: str, dataset, seed: int):
    if protocol == "random":
        return random_split(dataset, (0.9, 0.1), seed)
    if protocol == "cluster":
        return clustering_pair_split(dataset, seed=seed)
    if protocol == "cold":
        return cold_pair_split(dataset, seed=seed)
    raise ValueError(f"unknown protocol {protocol!r}")


def resolve_split(arg: str, dataset, seed: int):
    return make_split(arg, dataset, seed) if arg in PROTOCOLS else read_manifest(arg)


def cmd_train(args) -> int:
    config = load_config(args.config) if args.config else RunConfig()
    dataset = load_complexes(args.data)
    kg = ingest_triples(args.kg) if args.kg else None
    split = resolve_split(args.split, dataset, config.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(split, out / "split.tsv")
    result = train(config, dataset, split, kg)
    result.checkpoint.save(out / "checkpoint.kckpt")
    (out / "train.log").write_text(result.log_text())
    (out / "config.txt").write_text(config.to_text())
    sys.stdout.write(result.log_text())
    print(f"best epoch {result.checkpoint.epoch}, val_rmse {result.checkpoint.val_rmse:.6g}")
    return 0


def cmd_evaluate(args) -> int:
    ckpt = Checkpoint.load(args.ckpt)
    dataset = load_complexes(args.data)
    split = resolve_split(args.split, dataset, ckpt.config.seed)
    reports = evaluate_checkpoint(ckpt, dataset, split, args.dump)
    for name, rep in reports.items():
        print(f"[{name}]")
        sys.stdout.write(rep.to_text())
    if args.json:
        Path(args.json).write_text(json.dumps({k: json.loads(r.to_json()) for k, r in reports.items()},
                                              sort_keys=True, indent=2) + "\n")
    return 0


def _read_arg_or_file(value: str) -> str:
    p = Path(value)
    if p.is_file():
        lines = [ln.strip() for ln in p.read_text().splitlines()]
        return "".join(ln for ln in lines if ln and not ln.startswith(">"))
    return value


def cmd_predict(args) -> int:
    model = Checkpoint.load(args.ckpt).build_model()
    y, alpha = predict(model, _read_arg_or_file(args.sequence), args.smiles)
    sys.stdout.write(explain_text("query", y, alpha, None) if args.attention else f"{y:.10g}\n")
    return 0


def cmd_split(args) -> int:
    dataset = load_complexes(args.data)
    split = make_split(args.protocol, dataset, args.seed)
    write_manifest(split, args.out)
    sizes = ", ".join(f"{k}={len(v)}" for k, v in split.partitions.items())
    print(f"{args.protocol} split: {sizes}")
    for k, ok in sorted(split.checks.items()):
        print(f"check {k}: {'pass' if ok else 'FAIL'}")
    return 0 if all(split.checks.values()) else 1


def cmd_explain(args) -> int:
    model = Checkpoint.load(args.ckpt).build_model()
    dataset = load_complexes(args.data)
    if args.sample not in dataset.index:
        raise AffinityError(f"sample {args.sample!r} is not in {args.data}")
    text = explain_sample(model, dataset[args.sample])
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_kg_query(args) -> int:
    model = Checkpoint.load(args.ckpt).build_model()
    sys.stdout.write(format_ranking(explain_kg(model, args.entity, args.type, args.k)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kgaffinity", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model and write the best checkpoint")
    t.add_argument("--config")
    t.add_argument("--data", required=True)
    t.add_argument("--kg")
    t.add_argument("--split", default="random", help="manifest path or one of random|cluster|cold")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="metrics per split partition")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--split", required=True)
    e.add_argument("--dump", help="write per-sample predictions here")
    e.add_argument("--json", help="write the reports as JSON here")
    e.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("predict", help="predict the affinity of one complex")
    pr.add_argument("--ckpt", required=True)
    pr.add_argument("--sequence", required=True, help="residue string or a file holding it")
    pr.add_argument("--smiles", required=True)
    pr.add_argument("--attention", action="store_true", help="also print attention weights")
    pr.set_defaults(func=cmd_predict)

    s = sub.add_parser("split", help="write a split manifest")
    s.add_argument("--protocol", choices=PROTOCOLS, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_split)

    x = sub.add_parser("explain", help="attention export for one sample")
    x.add_argument("--ckpt", required=True)
    x.add_argument("--sample", required=True)
    x.add_argument("--data", required=True)
    x.add_argument("--out")
    x.set_defaults(func=cmd_explain)

    q = sub.add_parser("kg-query", help="nearest KG entities for a protein or ligand")
    q.add_argument("--ckpt", required=True)
    q.add_argument("--entity", required=True)
    q.add_argument("--type", choices=TAIL_TYPES, required=True)
    q.add_argument("--k", type=int, default=10)
    q.set_defaults(func=cmd_kg_query)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AffinityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
