"""Command-line entry point: one binary, subcommand per workflow.

Subcommands: verify, gradcheck, train, sweep, eval, gendata. Exit codes are
uniform: 0 success, 1 check failure, 2 usage or config error. Train and
sweep read an optional JSON config whose every key a flag can override;
rejected configs produce no partial outputs.

All randomness flows from one root seed. The sweep fans it out as
documented in :mod:`hamattn.train` (train corpus uses the root seed, the
held-out corpus root+1, each cell root*1_000_000 + depth*1_000 + restart).
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .checks import gradcheck_table, verify_report
from .data import Corpus, TASKS, gen_task, load_corpus, save_corpus
from .errors import CorpusError, DomainError, TrainingDiverged
from .evaluate import evaluate_pairs, evaluate_quatrains
from .model import ModelConfig, Seq2SeqModel, generate, save_checkpoint
from .train import TrainConfig, depth_sweep, train, write_sweep_csv

TRAIN_DEFAULTS = {
    "depth": 1,
    "epochs": 100,
    "learning_rate": 0.01,
    "batch_size": 32,
    "optimizer": "adam",
    "seed": 0,
    "hidden": 16,
    "bidirectional": True,
}

SWEEP_DEFAULTS = {
    "task": "copy",
    "pairs": 512,
    "seq_len": 6,
    "payload_vocab": 8,
    "eval_pairs": 64,
    "depths": [1, 2, 5],
    "restarts": 5,
    "epochs": 200,
    "learning_rate": 0.01,
    "batch_size": 32,
    "optimizer": "adam",
    "seed": 0,
    "hidden": 16,
    "bidirectional": True,
}


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _int_list(text: str) -> list:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from e


def _merge_config(defaults: dict, config_path, args, keys) -> dict:
    """defaults < JSON config file < explicitly passed flags."""
    cfg = dict(defaults)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as f:
            loaded = json.load(f)
        if not isinstance(loaded, dict):
            raise DomainError(f"config file must hold a JSON object: {config_path}")
        unknown = sorted(set(loaded) - set(defaults))
        if unknown:
            raise DomainError(f"unknown config keys {unknown}; known: {sorted(defaults)}")
        cfg.update(loaded)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _write_json(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(args) -> int:
    report, passed = verify_report(
        trials=args.trials,
        seed=args.seed,
        max_depth=args.max_depth,
        reduction_instances=args.reduction_instances,
    )
    if args.out:
        _write_json(report, args.out)
    nb = report["norm_bounds"]
    print(
        f"norm bounds: {nb['upper_violations']} upper-bound violations over "
        f"{nb['trials']} trials x {nb['max_depth']} levels "
        f"({nb['lower_violations']} lower-bound violations observed, as expected)"
    )
    ce = nb["lower_bound_counterexample"]
    print(
        "note: the lower bound fails in general; with key columns "
        f"{ce['K_columns']} and query {ce['q']} the output norm is "
        f"{ce['output_norm']:g} < min key norm {ce['min_key_norm']:g}"
    )
    red = report["reductions"]
    print(
        f"reductions: one-hot max err {red['ham_v_onehot_max_err']:.3e} (ham_v) / "
        f"{red['ham_s_onehot_max_err']:.3e} (ham_s), d=1 max err "
        f"{red['ham_v_d1_max_err']:.3e} / {red['ham_s_d1_max_err']:.3e}"
    )
    for name, entry in report["properties"].items():
        status = "ok" if entry["passed"] else "FAIL"
        print(f"property {name}: max err {entry['max_err']:.3e} [{status}]")
    print("verify: PASS" if passed else "verify: FAIL")
    return 0 if passed else 1


def cmd_gradcheck(args) -> int:
    rows = gradcheck_table(scale=args.scale, seed=args.seed, instances=args.instances)
    width = max(len(r["name"]) for r in rows)
    failures = []
    for r in rows:
        status = "ok" if r["passed"] else "FAIL"
        print(f"{r['name']:<{width}}  max rel err {r['max_err']:.3e}  (< {r['threshold']:.0e})  [{status}]")
        if not r["passed"]:
            failures.append(r)
    for r in failures:
        print(f"gradcheck failure: op {r['name']} at variable {r['worst'][0]}, coordinate {r['worst'][1]}")
    return 0 if not failures else 1


def cmd_gendata(args) -> int:
    corpus = gen_task(args.task, args.pairs, args.seq_len, args.payload_vocab, args.seed)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus) + 1} lines (header + {len(corpus)} pairs) to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _merge_config(TRAIN_DEFAULTS, args.config, args, TRAIN_DEFAULTS.keys())
    train_config = TrainConfig(
        learning_rate=cfg["learning_rate"],
        optimizer=cfg["optimizer"],
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        seed=cfg["seed"],
        ham_depth=cfg["depth"],
    )
    corpus = load_corpus(args.corpus)
    if len(corpus) == 0:
        raise DomainError(f"corpus {args.corpus} holds no pairs")
    model = Seq2SeqModel(
        ModelConfig(corpus.vocab_size, cfg["hidden"], cfg["depth"], cfg["bidirectional"]),
        np.random.default_rng(cfg["seed"]),
    )
    model, losses = train(model, corpus, train_config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, out / "checkpoint.json")
    with open(out / "losses.csv", "w", encoding="utf-8") as f:
        f.write("epoch,loss\n")
        for epoch, loss in enumerate(losses):
            f.write(f"{epoch},{loss!r}\n")
    if args.emit_generations:
        gen_pairs = [
            (src, generate(src, model, max_len=len(tgt) + 2)) for src, tgt in corpus.pairs
        ]
        save_corpus(
            Corpus(corpus.vocab_size, gen_pairs, task=corpus.task, strict=False),
            out / "generations.jsonl",
        )
    print(f"trained {cfg['epochs']} epochs, final loss {losses[-1]:.6f}; outputs in {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _merge_config(SWEEP_DEFAULTS, args.config, args, SWEEP_DEFAULTS.keys())
    train_config = TrainConfig(
        learning_rate=cfg["learning_rate"],
        optimizer=cfg["optimizer"],
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        seed=cfg["seed"],
        restarts=cfg["restarts"],
    )
    depths = [int(d) for d in cfg["depths"]]
    if depths != sorted(depths) or not depths:
        raise DomainError(f"depths must be a non-empty ascending list, got {depths}")
    train_corpus = gen_task(
        cfg["task"], cfg["pairs"], cfg["seq_len"], cfg["payload_vocab"], cfg["seed"]
    )
    eval_corpus = gen_task(
        cfg["task"], cfg["eval_pairs"], cfg["seq_len"], cfg["payload_vocab"], cfg["seed"] + 1
    )

    records, summary = depth_sweep(
        train_corpus,
        eval_corpus,
        depths,
        train_config,
        hidden=cfg["hidden"],
        bidirectional=cfg["bidirectional"],
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(records, out / "sweep.csv", include_timing=args.record_timing)
    _write_json(
        {**summary, "config": cfg, "records": [asdict(r) for r in records]},
        out / "sweep_summary.json",
    )
    for depth in depths:
        print(f"depth {depth}: best final loss {summary['best_loss'][str(depth)]:.6f}")
    verdict = summary["monotone_within_tolerance"]
    print(f"monotone within {summary['tolerance']:.0%} tolerance: {verdict}")
    return 0 if verdict else 1


def cmd_eval(args) -> int:
    gold = load_corpus(args.gold)
    generated = load_corpus(args.generated, strict=False)
    if len(generated) != len(gold):
        raise DomainError(
            f"pair count mismatch: {len(generated)} generated vs {len(gold)} gold"
        )
    if len(gold) == 0:
        raise DomainError("nothing to evaluate")
    gen_targets = [tgt for _, tgt in generated.pairs]
    gold_targets = [tgt for _, tgt in gold.pairs]
    if args.quatrains:
        report = evaluate_quatrains(gen_targets, gold_targets)
    else:
        report = evaluate_pairs(gen_targets, gold_targets)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamattn",
        description="hierarchical attention library: verification suites, training and sweeps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run norm-bound, reduction and distribution suites")
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=_positive_int, default=10)
    p.add_argument("--reduction-instances", type=_positive_int, default=1_000)
    p.add_argument("--out", help="write the full JSON report to this file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gradcheck", help="finite-difference check of every differentiable op")
    p.add_argument("--scale", choices=("tiny", "small"), default="tiny")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=_positive_int, default=30)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("gendata", help="generate a synthetic task corpus")
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--pairs", type=_positive_int, required=True)
    p.add_argument("--seq-len", type=_positive_int, default=6)
    p.add_argument("--payload-vocab", type=_positive_int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gendata)

    p = sub.add_parser("train", help="train one model on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON config; flags override its keys")
    p.add_argument("--depth", type=_positive_int)
    p.add_argument("--epochs", type=_positive_int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=_positive_int, dest="batch_size")
    p.add_argument("--optimizer", choices=("sgd", "adam"))
    p.add_argument("--seed", type=int)
    p.add_argument("--hidden", type=_positive_int)
    p.add_argument("--bidirectional", action=argparse.BooleanOptionalAction)
    p.add_argument("--emit-generations", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="depth sweep with restarts under one budget")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON config; flags override its keys")
    p.add_argument("--task", choices=TASKS)
    p.add_argument("--pairs", type=_positive_int)
    p.add_argument("--seq-len", type=_positive_int, dest="seq_len")
    p.add_argument("--payload-vocab", type=_positive_int, dest="payload_vocab")
    p.add_argument("--eval-pairs", type=_positive_int, dest="eval_pairs")
    p.add_argument("--depths", type=_int_list)
    p.add_argument("--restarts", type=_positive_int)
    p.add_argument("--epochs", type=_positive_int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=_positive_int, dest="batch_size")
    p.add_argument("--optimizer", choices=("sgd", "adam"))
    p.add_argument("--seed", type=int)
    p.add_argument("--hidden", type=_positive_int)
    p.add_argument("--bidirectional", action=argparse.BooleanOptionalAction)
    p.add_argument(
        "--record-timing",
        action="store_true",
        help="include wall-clock seconds in the CSV (breaks byte-identical reruns)",
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="score a generated corpus against a gold corpus")
    p.add_argument("--generated", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--quatrains", action="store_true", help="use the 4-line continuation protocol")
    p.add_argument("--out", help="write the JSON report to this file")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrainingDiverged as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (DomainError, CorpusError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
