"""Bridge from corpora to encoded model inputs."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .context import ContextMode, Vocab, build_pseudo_sentence, encode
from .corpus import Corpus, Document, LABEL_INDEX, Mention
from .encoder.model import Batch


def encode_mentions(document: Document, mentions: Sequence[Mention],
                    mode: ContextMode, vocab: Vocab, max_len: int,
                    require_labels: bool = False) -> Batch:
    """Encode the given mentions of one document into a Batch."""
    return encode_pairs([(document, m) for m in mentions], mode, vocab,
                        max_len, require_labels)


def encode_corpus(corpus: Corpus, mode: ContextMode, vocab: Vocab,
                  max_len: int, require_labels: bool = False) -> Batch:
    """Encode every mention of the corpus, in document order."""
    pairs = [(d, m) for d in corpus.documents for m in d.mentions]
    return encode_pairs(pairs, mode, vocab, max_len, require_labels)


def encode_pairs(pairs: Iterable[tuple[Document, Mention]], mode: ContextMode,
                 vocab: Vocab, max_len: int,
                 require_labels: bool = False) -> Batch:
    ids_rows, mask_rows, seg_rows, is_rows, label_rows, names = [], [], [], [], [], []
    all_labeled = True
    for document, mention in pairs:
        ps = build_pseudo_sentence(mention, document, mode, max_len)
        ids, mask, segments = encode(ps, vocab, max_len)
        ids_rows.append(ids)
        mask_rows.append(mask)
        seg_rows.append(segments)
        is_rows.append(ps.is_index)
        names.append(mention.id)
        if mention.label is None:
            all_labeled = False
            if require_labels:
                raise ValueError(f"document {document.id!r}, mention "
                                 f"{mention.id!r}: unlabeled mention where "
                                 "labels are required")
        else:
            label_rows.append(LABEL_INDEX[mention.label])
    if not ids_rows:
        raise ValueError("no mentions to encode")
    labels = np.asarray(label_rows, dtype=np.int64) if all_labeled else None
    return Batch(ids=np.stack(ids_rows), mask=np.stack(mask_rows),
                 segments=np.stack(seg_rows),
                 is_index=np.asarray(is_rows, dtype=np.int64),
                 labels=labels, mention_ids=tuple(names))
