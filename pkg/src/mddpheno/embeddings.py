"""Continuous bag-of-words embeddings trained from scratch.

CBOW with negative sampling: a center word is predicted from the mean of
its in-window context vectors against k noise words drawn from the
unigram^0.75 distribution.  Training is single-threaded and fully seeded
so repeated runs produce bitwise-identical matrices.

Sentence features for the baseline classifiers are the component-wise
mean of in-vocabulary input vectors (zero vector when nothing is in
vocabulary), which makes them invariant to token order.
"""

from __future__ import annotations

import re
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ._serial import read_container, write_container
from .errors import ValidationError

# Alphanumeric runs; internal hyphens/slashes stay inside one token so
# shorthand like "phq-9" and "r/o" survives.
_TOKEN_RE = re.compile(r"[^\W_]+(?:[-/][^\W_]+)*")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumerics (keeping internal -/)."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]
    counts: np.ndarray  # aligned with tokens
    min_count: int
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index


def build_vocab(sentences: list[list[str]], min_count: int = 2) -> Vocab:
    """Retain tokens with frequency >= min_count, indexed by descending
    frequency then lexicographic order (deterministic across runs)."""
    if min_count < 1:
        raise ValidationError(f"min_count must be >= 1, got {min_count}")
    freq = Counter()
    for sent in sentences:
        freq.update(sent)
    kept = sorted(
        (t for t, c in freq.items() if c >= min_count),
        key=lambda t: (-freq[t], t),
    )
    if not kept:
        warnings.warn("vocabulary is empty after frequency filtering", stacklevel=2)
    counts = np.array([freq[t] for t in kept], dtype=np.int64)
    return Vocab(tokens=tuple(kept), counts=counts, min_count=min_count)


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 300
    window: int = 5
    negative: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_count: int = 2
    seed: int = 0


@dataclass(frozen=True)
class EmbeddingModel:
    vocab: Vocab
    input_vectors: np.ndarray  # V x dim
    output_vectors: np.ndarray  # V x dim
    config: EmbeddingConfig
    epoch_losses: tuple[float, ...] = ()


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def cbow_loss_and_grads(
    input_vectors: np.ndarray,
    output_vectors: np.ndarray,
    context: list[int],
    target: int,
    negatives: list[int],
):
    """Negative-sampling loss and analytic gradients for one training sample.

    Returns (loss, grad_input, grad_output) where the gradient dicts map a
    row index to its dL/dv.  Kept separate from the training loop so the
    finite-difference oracle can probe it directly.
    """
    ctx = np.asarray(context, dtype=np.intp)
    h = input_vectors[ctx].mean(axis=0)
    outs = np.asarray([target] + list(negatives), dtype=np.intp)
    labels = np.zeros(len(outs))
    labels[0] = 1.0
    scores = output_vectors[outs] @ h
    sig = _sigmoid(scores)
    # L = -log sig(s_pos) - sum log sig(-s_neg)
    loss = -np.log(sig[0]) - np.sum(np.log(1.0 - sig[1:]))
    g = sig - labels  # dL/dscore
    dh = g @ output_vectors[outs]

    grad_output: dict[int, np.ndarray] = {}
    for i, row in enumerate(outs):
        row = int(row)
        grad_output[row] = grad_output.get(row, 0.0) + g[i] * h
    grad_input: dict[int, np.ndarray] = {}
    share = dh / len(ctx)
    for row in ctx:
        row = int(row)
        grad_input[row] = grad_input.get(row, 0.0) + share
    return loss, grad_input, grad_output


def train_cbow(
    sentences: list[list[str]],
    config: EmbeddingConfig = EmbeddingConfig(),
    vocab: Vocab | None = None,
) -> EmbeddingModel:
    """Train CBOW embeddings over tokenized sentences.

    The mean negative-sampling loss is tracked per epoch; the final epoch's
    loss is recorded in the model header alongside the first epoch's.
    """
    if vocab is None:
        vocab = build_vocab(sentences, min_count=config.min_count)
    if len(vocab) == 0:
        raise ValidationError("cannot train embeddings on an empty vocabulary")

    encoded = []
    for sent in sentences:
        ids = np.array([vocab.index[t] for t in sent if t in vocab], dtype=np.intp)
        if len(ids) >= 2:
            encoded.append(ids)
    if not encoded:
        raise ValidationError("training stream is empty after vocabulary filtering")

    dim, window, k = config.dim, config.window, config.negative
    rng = np.random.default_rng(config.seed)
    w_in = (rng.random((len(vocab), dim)) - 0.5) / dim
    w_out = np.zeros((len(vocab), dim))

    noise = vocab.counts.astype(np.float64) ** 0.75
    noise_cum = np.cumsum(noise)
    noise_total = noise_cum[-1]

    positions_per_epoch = sum(len(s) for s in encoded)
    total_positions = config.epochs * positions_per_epoch
    lr0 = config.learning_rate
    lr_floor = lr0 * 1e-4
    processed = 0
    epoch_losses = []

    for _epoch in range(config.epochs):
        loss_sum = 0.0
        loss_n = 0
        for sent in encoded:
            n = len(sent)
            for t in range(n):
                lr = max(lr_floor, lr0 * (1.0 - processed / total_positions))
                processed += 1
                lo = max(0, t - window)
                ctx = np.concatenate([sent[lo:t], sent[t + 1 : t + 1 + window]])
                if ctx.size == 0:
                    continue
                target = sent[t]
                draws = np.searchsorted(noise_cum, rng.random(k) * noise_total)
                negs = draws[draws != target]
                outs = np.concatenate(([target], negs))

                h = w_in[ctx].mean(axis=0)
                scores = w_out[outs] @ h
                sig = _sigmoid(scores)
                loss_sum += -np.log(max(sig[0], 1e-12)) - np.sum(
                    np.log(np.maximum(1.0 - sig[1:], 1e-12))
                )
                loss_n += 1
                g = sig.copy()
                g[0] -= 1.0
                g *= lr
                dh = g @ w_out[outs]
                np.add.at(w_out, outs, np.outer(g, h) * -1.0)
                np.add.at(w_in, ctx, -dh / len(ctx))
        epoch_losses.append(float(loss_sum) / max(loss_n, 1))

    if not np.all(np.isfinite(w_in)) or not np.all(np.isfinite(w_out)):
        raise ValidationError("embedding training diverged (non-finite vectors)")

    return EmbeddingModel(
        vocab=vocab,
        input_vectors=w_in,
        output_vectors=w_out,
        config=config,
        epoch_losses=tuple(epoch_losses),
    )


def embed_sentence(model: EmbeddingModel, sentence_text: str) -> np.ndarray:
    """Mean of in-vocabulary input vectors; zero vector when none match.

    Indices are summed in sorted order so the result is bitwise invariant
    to token permutations.
    """
    ids = sorted(model.vocab.index[t] for t in tokenize(sentence_text) if t in model.vocab)
    if not ids:
        return np.zeros(model.config.dim)
    return model.input_vectors[np.asarray(ids, dtype=np.intp)].mean(axis=0)


def save_embeddings(model: EmbeddingModel, path) -> None:
    header = {
        "kind": "cbow-embeddings",
        "config": {
            "dim": model.config.dim,
            "window": model.config.window,
            "negative": model.config.negative,
            "epochs": model.config.epochs,
            "learning_rate": model.config.learning_rate,
            "min_count": model.config.min_count,
            "seed": model.config.seed,
        },
        "vocab": list(model.vocab.tokens),
        "epoch_losses": list(model.epoch_losses),
    }
    write_container(
        path,
        header,
        {
            "counts": model.vocab.counts,
            "input_vectors": model.input_vectors,
            "output_vectors": model.output_vectors,
        },
    )


def load_embeddings(path) -> EmbeddingModel:
    header, arrays = read_container(path)
    if header.get("kind") != "cbow-embeddings":
        raise ValidationError(f"{path}: not an embeddings model file")
    cfg = header["config"]
    config = EmbeddingConfig(
        dim=cfg["dim"],
        window=cfg["window"],
        negative=cfg["negative"],
        epochs=cfg["epochs"],
        learning_rate=cfg["learning_rate"],
        min_count=cfg["min_count"],
        seed=cfg["seed"],
    )
    vocab = Vocab(
        tokens=tuple(header["vocab"]), counts=arrays["counts"], min_count=config.min_count
    )
    return EmbeddingModel(
        vocab=vocab,
        input_vectors=arrays["input_vectors"],
        output_vectors=arrays["output_vectors"],
        config=config,
        epoch_losses=tuple(header.get("epoch_losses", ())),
    )
