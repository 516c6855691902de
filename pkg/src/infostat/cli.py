"""Command-line entry point.

Subcommands: gen-synthetic, build-vocab, train, predict, crossval,
grad-check, sigtest. Options may come from a JSON config file via
--config; explicit flags take precedence over the file, which takes
precedence over built-in defaults. The seed falls back to the
INFOSTAT_SEED environment variable when not given otherwise.

Exit codes: 0 success, 1 input or validation error, 2 numeric failure
(training divergence, failed gradient check).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import context, corpus as corpus_mod, evaluation
from .context import Vocab, mode_from_name
from .dataset import encode_corpus
from .encoder import (CheckpointError, ModelConfig, TrainConfig,
                      TrainingDivergedError, gradient_check, load_checkpoint,
                      make_check_batch, predict_batch, save_checkpoint, train)
from .encoder.model import predictions_from_probs

_DESK_MODEL = dict(layers=2, d_model=64, heads=4, d_ff=256, max_len=64,
                   dropout=0.1)
_PAPER_MODEL = dict(layers=12, d_model=768, heads=12, d_ff=3072, max_len=128,
                    dropout=0.1)
_DESK_TRAIN = dict(epochs=30, learning_rate=1e-3, batch_size=32)
_PAPER_TRAIN = dict(epochs=3, learning_rate=5e-5, batch_size=32)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=1,
                               sort_keys=True) + "\n", encoding="utf-8")


class _Resolver:
    """flag > config file > default, recording the resolved values."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file_values = {}
        if getattr(args, "config", None):
            raw = Path(args.config).read_text(encoding="utf-8")
            self.file_values = json.loads(raw)
            if not isinstance(self.file_values, dict):
                raise ValueError("config file must hold a JSON object")
        self.resolved: dict = {}

    def get(self, key: str, default):
        value = getattr(self.args, key, None)
        if value is None:
            value = self.file_values.get(key, default)
        self.resolved[key] = value
        return value

    def seed(self) -> int:
        value = getattr(self.args, "seed", None)
        if value is None:
            value = self.file_values.get("seed")
        if value is None:
            value = os.environ.get("INFOSTAT_SEED")
        value = 0 if value is None else int(value)
        self.resolved["seed"] = value
        return value

    def snapshot(self, command: str, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(out_dir / "resolved_config.json",
                    {"command": command, **self.resolved})


def _model_config(res: _Resolver, vocab_size: int) -> ModelConfig:
    base = dict(_PAPER_MODEL) if getattr(res.args, "paper_scale", False) \
        else dict(_DESK_MODEL)
    return ModelConfig(n_layers=int(res.get("layers", base["layers"])),
                       d_model=int(res.get("d_model", base["d_model"])),
                       n_heads=int(res.get("heads", base["heads"])),
                       d_ff=int(res.get("d_ff", base["d_ff"])),
                       max_len=int(res.get("max_len", base["max_len"])),
                       vocab_size=vocab_size,
                       dropout_rate=float(res.get("dropout", base["dropout"])),
                       dtype=str(res.get("dtype", "float64")))


def _train_config(res: _Resolver, seed: int) -> TrainConfig:
    base = dict(_PAPER_TRAIN) if getattr(res.args, "paper_scale", False) \
        else dict(_DESK_TRAIN)
    return TrainConfig(
        epochs=int(res.get("epochs", base["epochs"])),
        learning_rate=float(res.get("learning_rate", base["learning_rate"])),
        batch_size=int(res.get("batch_size", base["batch_size"])),
        seed=seed,
        weight_decay=float(res.get("weight_decay", 0.01)),
        grad_clip_norm=float(res.get("grad_clip", 1.0)))


def _mode(res: _Resolver) -> context.ContextMode:
    name = str(res.get("mode", "context2"))
    window = int(res.get("prev_window", 0))
    return mode_from_name(name, window)


def _load_corpus(res: _Resolver) -> corpus_mod.Corpus:
    path = res.get("corpus", None)
    if not path:
        raise ValueError("a corpus path is required (--corpus)")
    return corpus_mod.load_corpus(path)


def _prediction_line(mention_id: str, gold, pred, probs) -> str:
    return json.dumps({"mention_id": mention_id,
                       "gold": gold.value if gold is not None else None,
                       "pred": pred.value,
                       "probs": [float(p) for p in probs]},
                      ensure_ascii=False)


# ---------------------------------------------------------------------------
# Subcommands

def cmd_gen_synthetic(args) -> int:
    res = _Resolver(args)
    seed = res.seed()
    n_docs = int(res.get("docs", 20))
    sentences = int(res.get("sentences", 8))
    mentions = int(res.get("mentions_per_sentence", 4))
    out = Path(res.get("out", None) or "corpus.json")
    synthetic = corpus_mod.generate_synthetic(seed, n_docs, sentences, mentions)
    out.parent.mkdir(parents=True, exist_ok=True)
    corpus_mod.save_corpus(synthetic, out)
    stats = corpus_mod.corpus_stats(synthetic)
    print(f"wrote {out} ({synthetic.total_mentions()} mentions, "
          f"{len(synthetic.documents)} documents)")
    for label, entry in stats.items():
        print(f"  {label.value:<24} {entry.count:>6}  {entry.fraction:7.2%}")
    return 0


def cmd_build_vocab(args) -> int:
    res = _Resolver(args)
    loaded = _load_corpus(res)
    mode = _mode(res)
    min_freq = int(res.get("min_freq", 1))
    out = Path(res.get("out", None) or "vocab.txt")
    vocab = context.build_vocab(loaded, mode, min_freq)
    out.parent.mkdir(parents=True, exist_ok=True)
    vocab.save(out)
    print(f"wrote {out} ({len(vocab)} tokens, sha256 {vocab.sha256()[:12]})")
    return 0


def cmd_train(args) -> int:
    res = _Resolver(args)
    seed = res.seed()
    loaded = _load_corpus(res)
    mode = _mode(res)
    min_freq = int(res.get("min_freq", 1))
    out_dir = Path(res.get("out", None) or "train-out")
    vocab = context.build_vocab(loaded, mode, min_freq)
    model_config = _model_config(res, len(vocab))
    train_config = _train_config(res, seed)
    res.snapshot("train", out_dir)

    dataset = encode_corpus(loaded, mode, vocab, model_config.max_len,
                            require_labels=True)
    result = train(dataset, model_config, train_config)
    vocab.save(out_dir / "vocab.txt")
    save_checkpoint(result.params, model_config, out_dir / "checkpoint.ckpt",
                    extra={"vocab_sha256": vocab.sha256(),
                           "mode": mode.kind.value,
                           "prev_sentence_window": mode.prev_sentence_window})
    _write_json(out_dir / "loss_log.json",
                {"epoch_losses": result.epoch_losses, "steps": result.n_steps})
    for epoch, loss in enumerate(result.epoch_losses):
        print(f"epoch {epoch:>3}  mean loss {loss:.6f}")
    print(f"wrote {out_dir / 'checkpoint.ckpt'}")
    return 0


def cmd_predict(args) -> int:
    res = _Resolver(args)
    loaded = _load_corpus(res)
    ckpt_path = res.get("checkpoint", None)
    vocab_path = res.get("vocab", None)
    if not ckpt_path or not vocab_path:
        raise ValueError("predict requires --checkpoint and --vocab")
    params, model_config, extra = load_checkpoint(ckpt_path)
    vocab = Vocab.load(vocab_path)
    stored = extra.get("vocab_sha256")
    if stored is not None and stored != vocab.sha256():
        raise ValueError(f"vocab mismatch: checkpoint was trained with "
                         f"vocabulary sha256 {stored[:12]}, supplied file "
                         f"hashes to {vocab.sha256()[:12]}")
    mode_name = getattr(args, "mode", None) or extra.get("mode")
    if mode_name is None:
        raise ValueError("predict requires --mode (not stored in checkpoint)")
    if mode_name in context.MODE_NAMES:
        mode = mode_from_name(mode_name, int(res.get(
            "prev_window", extra.get("prev_sentence_window", 0))))
    else:
        mode = context.ContextMode(context.ContextKind(mode_name),
                                   int(extra.get("prev_sentence_window", 0)))
    res.resolved["mode"] = mode.kind.value
    out = Path(res.get("out", None) or "predictions.jsonl")

    out.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for document in loaded.documents:
        if not document.mentions:
            continue
        batch = encode_corpus(corpus_mod.Corpus(documents=(document,)), mode,
                              vocab, model_config.max_len)
        probs = predict_batch(batch, params, model_config)
        preds = predictions_from_probs(probs, batch.mention_ids)
        for mention, prediction in zip(document.mentions, preds):
            lines.append(_prediction_line(mention.id, mention.label,
                                          prediction.label,
                                          prediction.probabilities))
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(lines)} predictions)")
    return 0


def cmd_crossval(args) -> int:
    res = _Resolver(args)
    seed = res.seed()
    loaded = _load_corpus(res)
    mode = _mode(res)
    k = int(res.get("k", 10))
    jobs = int(res.get("jobs", 1))
    min_freq = int(res.get("min_freq", 1))
    out_dir = Path(res.get("out", None) or "crossval-out")
    model_config = _model_config(res, vocab_size=8)  # vocab set per fold
    train_config = _train_config(res, seed)
    res.snapshot("crossval", out_dir)

    result = evaluation.run_cross_validation(
        loaded, mode, model_config, train_config, k=k, seed=seed, jobs=jobs,
        min_freq=min_freq, keep_params=True)

    _write_json(out_dir / "report.json", result.to_json_dict())
    for fold in result.folds:
        fold_dir = out_dir / f"fold-{fold.fold:02d}"
        fold_dir.mkdir(parents=True, exist_ok=True)
        lines = [_prediction_line(r.mention_id, r.gold, r.pred, r.probs)
                 for r in fold.records]
        (fold_dir / "predictions.jsonl").write_text("\n".join(lines) + "\n",
                                                    encoding="utf-8")
        Vocab(tokens=fold.vocab_tokens).save(fold_dir / "vocab.txt")
        save_checkpoint(fold.params, fold.model_config,
                        fold_dir / "checkpoint.ckpt",
                        extra={"fold": fold.fold,
                               "vocab_sha256": Vocab(fold.vocab_tokens).sha256(),
                               "mode": mode.kind.value,
                               "prev_sentence_window": mode.prev_sentence_window})
    print(f"pooled accuracy {result.report.accuracy:.4f} over "
          f"{result.report.n} mentions ({k} folds)")
    for label, metrics in result.report.per_class.items():
        print(f"  {label.value:<24} P {metrics.precision:6.3f}  "
              f"R {metrics.recall:6.3f}  F {metrics.f1:6.3f}  "
              f"support {metrics.support}")
    print(f"wrote {out_dir / 'report.json'}")
    return 0


def cmd_grad_check(args) -> int:
    res = _Resolver(args)
    seed = res.seed()
    config = ModelConfig(n_layers=int(res.get("layers", 2)),
                         d_model=int(res.get("d_model", 16)),
                         n_heads=int(res.get("heads", 4)),
                         d_ff=int(res.get("d_ff", 64)),
                         max_len=int(res.get("max_len", 16)),
                         vocab_size=int(res.get("vocab_size", 32)),
                         dropout_rate=0.0)
    batch = make_check_batch(config, seed,
                             batch_size=int(res.get("batch_size", 4)))
    epsilon = float(res.get("epsilon", 1e-5))
    threshold = float(res.get("threshold", 1e-4))
    report = gradient_check(config, batch, seed=seed, epsilon=epsilon)
    print(f"checked {report.n_entries} parameter entries; "
          f"max relative error {report.max_relative_error:.3e}")
    if report.passed(threshold):
        print(f"PASS (threshold {threshold:g})")
        return 0
    worst = max(report.per_tensor, key=report.per_tensor.get)
    print(f"FAIL: worst tensor {worst} "
          f"({report.per_tensor[worst]:.3e} >= {threshold:g})",
          file=sys.stderr)
    return 2


def _read_predictions(path: str) -> dict[str, tuple[str, str]]:
    records = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        if data.get("gold") is None:
            raise ValueError(f"{path}: significance testing requires gold "
                             f"labels (mention {data.get('mention_id')!r})")
        records[data["mention_id"]] = (data["gold"], data["pred"])
    if not records:
        raise ValueError(f"{path}: no prediction records")
    return records


def cmd_sigtest(args) -> int:
    res = _Resolver(args)
    seed = res.seed()
    rounds = int(res.get("rounds", 10000))
    a_path = res.get("a", None)
    b_path = res.get("b", None)
    if not a_path or not b_path:
        raise ValueError("sigtest requires --a and --b prediction files")
    a_records = _read_predictions(a_path)
    b_records = _read_predictions(b_path)
    if set(a_records) != set(b_records):
        raise ValueError("prediction files cover different mention ids")
    order = sorted(a_records)
    gold = [a_records[m][0] for m in order]
    if any(b_records[m][0] != g for m, g in zip(order, gold)):
        raise ValueError("prediction files disagree on gold labels")
    preds_a = [a_records[m][1] for m in order]
    preds_b = [b_records[m][1] for m in order]
    statistic = str(res.get("statistic", "accuracy"))
    f1_label = res.get("f1_class", None)
    p = evaluation.randomization_test(preds_a, preds_b, gold, rounds=rounds,
                                      seed=seed, statistic=statistic,
                                      f1_label=f1_label)
    print(f"p-value: {p:.6g}")
    return 0


# ---------------------------------------------------------------------------
# Parser

class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors: exit 1, not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--seed", type=int,
                     help="PRNG seed (fallback: INFOSTAT_SEED, then 0)")


def _add_mode(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--mode", choices=sorted(context.MODE_NAMES),
                     help="context variant (default context2)")
    sub.add_argument("--prev-window", type=int, dest="prev_window",
                     help="extra preceding sentences in the local context")


def _add_model_train(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--paper-scale", action="store_true",
                     help="12 layers / 768 units / 12 heads / 128 tokens, "
                          "3 epochs at learning rate 5e-5")
    for flag, kind in (("--layers", int), ("--d-model", int), ("--heads", int),
                       ("--d-ff", int), ("--max-len", int), ("--dropout", float),
                       ("--epochs", int), ("--learning-rate", float),
                       ("--batch-size", int), ("--weight-decay", float),
                       ("--grad-clip", float)):
        sub.add_argument(flag, type=kind, dest=flag[2:].replace("-", "_"))
    sub.add_argument("--dtype", choices=["float64", "float32"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="infostat",
        description="Information-status classification with discourse "
                    "context-aware self-attention")
    commands = parser.add_subparsers(dest="command", required=True,
                                     parser_class=_Parser)

    p = commands.add_parser("gen-synthetic", help="write a synthetic corpus")
    _add_common(p)
    p.add_argument("--docs", type=int)
    p.add_argument("--sentences", type=int)
    p.add_argument("--mentions-per-sentence", type=int,
                   dest="mentions_per_sentence")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_synthetic)

    p = commands.add_parser("build-vocab", help="write a vocabulary file")
    _add_common(p)
    _add_mode(p)
    p.add_argument("--corpus")
    p.add_argument("--min-freq", type=int, dest="min_freq")
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_vocab)

    p = commands.add_parser("train", help="train on a labeled corpus")
    _add_common(p)
    _add_mode(p)
    _add_model_train(p)
    p.add_argument("--corpus")
    p.add_argument("--min-freq", type=int, dest="min_freq")
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = commands.add_parser("predict", help="predict with a checkpoint")
    _add_common(p)
    _add_mode(p)
    p.add_argument("--corpus")
    p.add_argument("--checkpoint")
    p.add_argument("--vocab")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = commands.add_parser("crossval",
                            help="document-level k-fold cross-validation")
    _add_common(p)
    _add_mode(p)
    _add_model_train(p)
    p.add_argument("--corpus")
    p.add_argument("--k", type=int)
    p.add_argument("--jobs", type=int, help="parallel fold workers")
    p.add_argument("--min-freq", type=int, dest="min_freq")
    p.add_argument("--out")
    p.set_defaults(func=cmd_crossval)

    p = commands.add_parser("grad-check",
                            help="verify analytic gradients numerically")
    _add_common(p)
    for flag in ("--layers", "--d-model", "--heads", "--d-ff", "--max-len",
                 "--vocab-size", "--batch-size"):
        p.add_argument(flag, type=int, dest=flag[2:].replace("-", "_"))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_grad_check)

    p = commands.add_parser("sigtest",
                            help="approximate randomization significance test")
    _add_common(p)
    p.add_argument("--a", help="first prediction JSONL file")
    p.add_argument("--b", help="second prediction JSONL file")
    p.add_argument("--rounds", type=int)
    p.add_argument("--statistic", choices=["accuracy", "f1"])
    p.add_argument("--f1-class", dest="f1_class")
    p.set_defaults(func=cmd_sigtest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainingDivergedError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (corpus_mod.CorpusError, CheckpointError, ValueError, OSError,
            KeyError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
