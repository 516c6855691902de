"""Document-level cross-validation, per-class metrics, significance testing."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .context import ContextMode, build_vocab
from .corpus import Corpus, ISLabel, LABELS, LABEL_INDEX, N_CLASSES, parse_label
from .dataset import encode_pairs
from .encoder.config import ModelConfig, TrainConfig
from .encoder.model import predict_batch
from .encoder.params import Params
from .encoder.training import train
from .rng import SplitMix64, counter_u64, derive_seed


@dataclass(frozen=True)
class FoldSplit:
    k: int
    assignments: dict[str, int]  # document id -> fold index

    def documents_in(self, fold: int) -> list[str]:
        return [doc_id for doc_id, f in self.assignments.items() if f == fold]


def split_folds(corpus: Corpus, k: int, seed: int) -> FoldSplit:
    """Shuffle documents by seed, then deal them round-robin into k folds."""
    doc_ids = [d.id for d in corpus.documents]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(doc_ids):
        raise ValueError(f"cannot split {len(doc_ids)} documents into {k} folds")
    order = list(range(len(doc_ids)))
    SplitMix64(derive_seed(seed, "folds")).shuffle(order)
    assignments = {doc_ids[doc]: i % k for i, doc in enumerate(order)}
    return FoldSplit(k=k, assignments=assignments)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    per_class: dict[ISLabel, ClassMetrics]
    accuracy: float
    confusion: np.ndarray  # [8, 8] counts, rows gold, columns predicted
    n: int

    def to_json_dict(self) -> dict:
        return {"accuracy": self.accuracy, "n": self.n,
                "per_class": {label.value: {"p": m.precision, "r": m.recall,
                                            "f": m.f1, "support": m.support}
                              for label, m in self.per_class.items()},
                "confusion": self.confusion.tolist()}


def _as_indices(labels: Sequence) -> np.ndarray:
    out = np.empty(len(labels), dtype=np.int64)
    for i, label in enumerate(labels):
        if isinstance(label, ISLabel):
            out[i] = LABEL_INDEX[label]
        else:
            out[i] = LABEL_INDEX[parse_label(str(label))]
    return out


def score(predictions: Sequence, gold: Sequence) -> EvalReport:
    """Per-class precision/recall/F1, accuracy and confusion counts.

    Zero-denominator conventions: precision and recall are 0 when their
    denominator is 0, and F1 is 0 when precision + recall is 0.
    """
    if len(predictions) != len(gold):
        raise ValueError(f"length mismatch: {len(predictions)} predictions "
                         f"vs {len(gold)} gold labels")
    if len(gold) == 0:
        raise ValueError("cannot score an empty prediction list")
    pred_idx = _as_indices(predictions)
    gold_idx = _as_indices(gold)
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(confusion, (gold_idx, pred_idx), 1)

    per_class: dict[ISLabel, ClassMetrics] = {}
    for c, label in enumerate(LABELS):
        tp = int(confusion[c, c])
        fp = int(confusion[:, c].sum()) - tp
        fn = int(confusion[c, :].sum()) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) \
            if precision + recall else 0.0
        per_class[label] = ClassMetrics(precision=precision, recall=recall,
                                        f1=f1, support=tp + fn)
    accuracy = float(np.trace(confusion)) / len(gold)
    return EvalReport(per_class=per_class, accuracy=accuracy,
                      confusion=confusion, n=len(gold))


def _f1_for(pred_idx: np.ndarray, gold_idx: np.ndarray, class_index: int) -> float:
    tp = int(np.sum((pred_idx == class_index) & (gold_idx == class_index)))
    fp = int(np.sum((pred_idx == class_index) & (gold_idx != class_index)))
    fn = int(np.sum((pred_idx != class_index) & (gold_idx == class_index)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return 2 * precision * recall / (precision + recall) \
        if precision + recall else 0.0


def randomization_test(preds_a: Sequence, preds_b: Sequence, gold: Sequence,
                       rounds: int, seed: int, statistic: str = "accuracy",
                       f1_label: ISLabel | str | None = None) -> float:
    """Approximate randomization p-value for the difference of two systems.

    Each round swaps the paired outputs (preds_a[i], preds_b[i])
    independently with probability 1/2 and recomputes the absolute
    difference of the statistic; p = (#rounds with difference >= observed
    + 1) / (rounds + 1). The default statistic is accuracy; "f1" tests the
    per-class F1 difference for `f1_label`.
    """
    if not (len(preds_a) == len(preds_b) == len(gold)):
        raise ValueError("preds_a, preds_b and gold must have equal lengths")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    n = len(gold)
    a_idx = _as_indices(preds_a)
    b_idx = _as_indices(preds_b)
    gold_idx = _as_indices(gold)
    bits = counter_u64(derive_seed(seed, "randomization"), rounds * n)
    swap = (bits & np.uint64(1)).astype(bool).reshape(rounds, n)

    if statistic == "accuracy":
        # Integer-exact: accuracy difference is |sum(correct_a) - sum(correct_b)|.
        delta = (a_idx == gold_idx).astype(np.int64) \
            - (b_idx == gold_idx).astype(np.int64)
        observed = abs(int(delta.sum()))
        signs = 1 - 2 * swap.astype(np.int64)
        sampled = np.abs(signs @ delta)
        exceed = int(np.sum(sampled >= observed))
    elif statistic == "f1":
        if f1_label is None:
            raise ValueError("the f1 statistic requires f1_label")
        c = LABEL_INDEX[f1_label if isinstance(f1_label, ISLabel)
                        else parse_label(str(f1_label))]
        observed = abs(_f1_for(a_idx, gold_idx, c) - _f1_for(b_idx, gold_idx, c))
        exceed = 0
        for r in range(rounds):
            sa = np.where(swap[r], b_idx, a_idx)
            sb = np.where(swap[r], a_idx, b_idx)
            diff = abs(_f1_for(sa, gold_idx, c) - _f1_for(sb, gold_idx, c))
            if diff >= observed:
                exceed += 1
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    return (exceed + 1) / (rounds + 1)


# ---------------------------------------------------------------------------
# Cross-validation

@dataclass(frozen=True)
class PredictionRecord:
    mention_id: str
    gold: ISLabel
    pred: ISLabel
    probs: tuple[float, ...]


@dataclass
class FoldResult:
    fold: int
    documents: list[str]
    records: list[PredictionRecord]
    report: EvalReport
    params: Params | None = None
    model_config: ModelConfig | None = None
    vocab_tokens: tuple[str, ...] | None = None


@dataclass
class CrossValResult:
    report: EvalReport
    folds: list[FoldResult]
    split: FoldSplit

    def pooled_records(self) -> list[PredictionRecord]:
        return [record for fold in self.folds for record in fold.records]

    def to_json_dict(self) -> dict:
        data = self.report.to_json_dict()
        data["folds"] = [dict(fold=f.fold, documents=f.documents,
                              **f.report.to_json_dict())
                         for f in self.folds]
        return data


@dataclass(frozen=True)
class _FoldTask:
    fold: int
    corpus: Corpus
    split: FoldSplit
    mode: ContextMode
    model_config: ModelConfig
    train_config: TrainConfig
    seed: int
    min_freq: int
    keep_params: bool


def _run_fold(task: _FoldTask) -> FoldResult:
    test_ids = set(task.split.documents_in(task.fold))
    train_docs = [d for d in task.corpus.documents if d.id not in test_ids]
    test_docs = [d for d in task.corpus.documents if d.id in test_ids]
    test_mentions = sum(len(d.mentions) for d in test_docs)
    train_mentions = sum(len(d.mentions) for d in train_docs)
    if test_mentions == 0 or train_mentions == 0:
        raise ValueError(f"fold {task.fold} has zero mentions on one side")

    vocab = build_vocab(Corpus(documents=tuple(train_docs)), task.mode,
                        task.min_freq)
    model_config = task.model_config.with_vocab_size(len(vocab))
    max_len = model_config.max_len
    train_set = encode_pairs([(d, m) for d in train_docs for m in d.mentions],
                             task.mode, vocab, max_len, require_labels=True)
    fold_train = replace(task.train_config,
                         seed=derive_seed(task.seed, "fold", task.fold))
    outcome = train(train_set, model_config, fold_train)

    records = []
    gold, predicted = [], []
    for document in test_docs:
        batch = encode_pairs([(document, m) for m in document.mentions],
                             task.mode, vocab, max_len, require_labels=True)
        probs = predict_batch(batch, outcome.params, model_config)
        for row, mention in zip(probs, document.mentions):
            pred = LABELS[int(np.argmax(row))]
            records.append(PredictionRecord(
                mention_id=mention.id, gold=mention.label, pred=pred,
                probs=tuple(float(x) for x in row)))
            gold.append(mention.label)
            predicted.append(pred)
    report = score(predicted, gold)
    return FoldResult(fold=task.fold, documents=sorted(test_ids),
                      records=records, report=report,
                      params=outcome.params if task.keep_params else None,
                      model_config=model_config if task.keep_params else None,
                      vocab_tokens=vocab.tokens if task.keep_params else None)


def run_cross_validation(corpus: Corpus, mode: ContextMode,
                         model_config: ModelConfig, train_config: TrainConfig,
                         k: int, seed: int, jobs: int = 1, min_freq: int = 1,
                         keep_params: bool = False) -> CrossValResult:
    """Train on k-1 folds, predict the held-out fold, pool all predictions.

    Documents never cross folds. Each fold builds its vocabulary from its
    own training documents and trains from scratch under a fold-derived
    seed, so results are independent of execution order; with jobs > 1 the
    folds run in separate processes and the pooled report is identical to
    the sequential one.
    """
    split = split_folds(corpus, k, seed)
    tasks = [_FoldTask(fold=f, corpus=corpus, split=split, mode=mode,
                       model_config=model_config, train_config=train_config,
                       seed=seed, min_freq=min_freq, keep_params=keep_params)
             for f in range(k)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(_run_fold, tasks))
    else:
        folds = [_run_fold(task) for task in tasks]
    folds.sort(key=lambda fr: fr.fold)

    pooled_gold = [r.gold for f in folds for r in f.records]
    pooled_pred = [r.pred for f in folds for r in f.records]
    return CrossValResult(report=score(pooled_pred, pooled_gold),
                          folds=folds, split=split)
