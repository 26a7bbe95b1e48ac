"""Multi-label text classifier: hashed character n-gram + word features,
averaged into a single embedding, scored by independent per-label logistic
outputs, trained with plain SGD.

The feature space has ``bucket_count`` hash buckets for n-grams (and for
words never seen in training) followed by one id per known vocabulary word.
Training math runs with a float32 embedding table (it can be millions of
rows) and float64 output weights; the canonical trained model is float32
end to end, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .hashing import bucket_of

__all__ = [
    "FeatureExtractorConfig",
    "TrainConfig",
    "ClassifierModel",
    "ModelLoadError",
    "ModelVersionError",
    "ModelTruncatedError",
    "ModelChecksumError",
    "extract_features",
    "embed",
    "predict_probs",
    "decode_labels",
    "loss_and_gradients",
    "train",
    "save_model",
    "load_model",
]

MAGIC = b"PMCM"
FORMAT_VERSION = 1


class ModelLoadError(Exception):
    """Model file unreadable (bad magic or structure)."""


class ModelVersionError(ModelLoadError):
    """Model file written by an unsupported format version."""


class ModelTruncatedError(ModelLoadError):
    """Model file shorter than its header promises."""


class ModelChecksumError(ModelLoadError):
    """Model file corrupted (checksum mismatch)."""


@dataclass(frozen=True)
class FeatureExtractorConfig:
    ngram_len: int = 3
    bucket_count: int = 1 << 21
    include_word_tokens: bool = True

    def __post_init__(self):
        if self.ngram_len < 1:
            raise ValueError("ngram_len must be at least 1")
        if self.bucket_count < 1:
            raise ValueError("bucket_count must be at least 1")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.1
    lr_update_rate: int = 100
    epochs: int = 30
    dim: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.lr_update_rate < 1:
            raise ValueError("lr_update_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.dim < 1:
            raise ValueError("dim must be at least 1")


@dataclass
class ClassifierModel:
    embeddings: np.ndarray      # (bucket_count + |word_vocab|, dim) float32
    output_weights: np.ndarray  # (label_count, dim) float32
    labels: tuple[int, ...]     # position -> category id
    word_vocab: tuple[str, ...]
    extractor: FeatureExtractorConfig

    def __post_init__(self):
        if self.embeddings.ndim != 2 or self.output_weights.ndim != 2:
            raise ValueError("model matrices must be 2-D")
        rows = self.extractor.bucket_count + len(self.word_vocab)
        if self.embeddings.shape[0] != rows:
            raise ValueError(
                f"{self.embeddings.shape[0]} embedding rows, extractor/vocab imply {rows}"
            )
        if self.output_weights.shape != (len(self.labels), self.embeddings.shape[1]):
            raise ValueError(
                f"output weight shape {self.output_weights.shape} inconsistent with "
                f"{len(self.labels)} labels and dim {self.embeddings.shape[1]}"
            )
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate category ids in label vocabulary")

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    @cached_property
    def word_index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.word_vocab)}


def extract_features(
    text: str,
    cfg: FeatureExtractorConfig,
    word_vocab: Mapping[str, int] | None = None,
) -> np.ndarray:
    """Feature ids for a whitespace-tokenized text (bag semantics, order
    and multiplicity preserved for averaging).

    Every token is wrapped as '<' token '>' and all length-``ngram_len``
    substrings are hashed into [0, bucket_count).  With
    ``include_word_tokens``, each whole token additionally yields a feature:
    vocabulary words get id bucket_count + vocab index, anything else is
    hashed into the bucket range like an n-gram.
    """
    ids: list[int] = []
    for token in text.split():
        wrapped = f"<{token}>"
        for i in range(len(wrapped) - cfg.ngram_len + 1):
            ids.append(bucket_of(wrapped[i : i + cfg.ngram_len], cfg.bucket_count))
        if cfg.include_word_tokens:
            if word_vocab is not None and token in word_vocab:
                ids.append(cfg.bucket_count + word_vocab[token])
            else:
                ids.append(bucket_of(token, cfg.bucket_count))
    return np.array(ids, dtype=np.int64)


def embed(feature_ids: Sequence[int] | np.ndarray, model: ClassifierModel) -> np.ndarray:
    """Mean of the embedding rows selected by the features (float64);
    empty feature set gives the zero vector."""
    ids = np.asarray(feature_ids, dtype=np.int64)
    if ids.size == 0:
        return np.zeros(model.dim, dtype=np.float64)
    if ids.min() < 0 or ids.max() >= model.embeddings.shape[0]:
        raise ValueError("feature id out of range: extractor and model disagree")
    return model.embeddings[ids].astype(np.float64).mean(axis=0)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict_probs(text: str, model: ClassifierModel) -> np.ndarray:
    """Per-label probabilities sigmoid(w_l . h) in label-vocabulary order."""
    ids = extract_features(text, model.extractor, model.word_index)
    hidden = embed(ids, model)
    return _sigmoid(model.output_weights.astype(np.float64) @ hidden)


def decode_labels(probs: np.ndarray, threshold: float) -> set[int]:
    """Positions with probability strictly above the threshold.

    Positions index the probability vector; map them to category ids with
    the model's label vocabulary.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold outside [0, 1]")
    return {int(i) for i in np.nonzero(np.asarray(probs) > threshold)[0]}


def loss_and_gradients(
    embeddings: np.ndarray,
    output_weights: np.ndarray,
    feature_ids: np.ndarray,
    targets: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Summed binary cross-entropy for one sample plus full gradients.

    Returns (loss, d loss/d output_weights, d loss/d embeddings).  Pure and
    dtype-preserving; the SGD loop applies exactly these gradients (with the
    embedding part restricted to the participating rows).
    """
    ids = np.asarray(feature_ids, dtype=np.int64)
    dim = embeddings.shape[1]
    if ids.size:
        hidden = embeddings[ids].mean(axis=0)
    else:
        hidden = np.zeros(dim, dtype=embeddings.dtype)
    z = output_weights @ hidden
    # log(1 + e^z) - y*z == -[y log p + (1-y) log (1-p)], stable for any z.
    loss = float(np.sum(np.logaddexp(0.0, z) - targets * z))
    g = _sigmoid(z) - targets
    grad_w = np.outer(g, hidden)
    grad_e = np.zeros_like(embeddings)
    if ids.size:
        row_grad = (output_weights.T @ g) / ids.size
        np.add.at(grad_e, ids, row_grad)
    return loss, grad_w, grad_e


def train(
    samples: Sequence[tuple[str, set[int] | Iterable[int]]],
    cfg: TrainConfig | None = None,
    extractor: FeatureExtractorConfig | None = None,
) -> ClassifierModel:
    """SGD over per-sample one-vs-all binary cross-entropy.

    The label vocabulary is the sorted set of category ids seen in the
    samples; the word vocabulary (when word features are on) is the sorted
    set of tokens.  Embeddings start uniform in [-1/dim, 1/dim], output
    weights at zero.  The learning rate decays linearly from cfg.lr to 0
    over epochs x len(samples) processed samples, recomputed every
    cfg.lr_update_rate samples.  Deterministic given cfg.seed (it drives
    both the init and the per-epoch shuffle).
    """
    cfg = cfg or TrainConfig()
    extractor = extractor or FeatureExtractorConfig()
    if not samples:
        raise ValueError("no training samples")
    label_ids: set[int] = set()
    for text, cats in samples:
        cats = set(cats)
        if not cats:
            raise ValueError(f"sample {text!r} has no categories")
        label_ids.update(cats)
    labels = tuple(sorted(label_ids))
    label_pos = {c: i for i, c in enumerate(labels)}

    if extractor.include_word_tokens:
        word_vocab = tuple(sorted({t for text, _ in samples for t in text.split()}))
    else:
        word_vocab = ()
    word_index = {w: i for i, w in enumerate(word_vocab)}

    feats = [extract_features(text, extractor, word_index) for text, _ in samples]
    n_labels = len(labels)
    targets = np.zeros((len(samples), n_labels), dtype=np.float64)
    for row, (_, cats) in enumerate(samples):
        for c in set(cats):
            targets[row, label_pos[c]] = 1.0

    rng = np.random.default_rng(cfg.seed)
    rows = extractor.bucket_count + len(word_vocab)
    bound = 1.0 / cfg.dim
    embeddings = rng.uniform(-bound, bound, (rows, cfg.dim)).astype(np.float32)
    output_weights = np.zeros((n_labels, cfg.dim), dtype=np.float64)

    total = cfg.epochs * len(samples)
    processed = 0
    lr = cfg.lr
    for _ in range(cfg.epochs):
        for s in rng.permutation(len(samples)):
            if processed % cfg.lr_update_rate == 0:
                lr = cfg.lr * (1.0 - processed / total)
            ids = feats[s]
            if ids.size:
                hidden = embeddings[ids].astype(np.float64).mean(axis=0)
            else:
                hidden = np.zeros(cfg.dim, dtype=np.float64)
            g = _sigmoid(output_weights @ hidden) - targets[s]
            if ids.size:
                row_grad = (output_weights.T @ g) * (lr / ids.size)
                np.add.at(embeddings, ids, -row_grad.astype(np.float32))
            output_weights -= lr * np.outer(g, hidden)
            processed += 1

    return ClassifierModel(
        embeddings=embeddings,
        output_weights=output_weights.astype(np.float32),
        labels=labels,
        word_vocab=word_vocab,
        extractor=extractor,
    )


# ---------------------------------------------------------------------------
# Persistence


def save_model(model: ClassifierModel, path: str | Path) -> None:
    """Binary layout: magic, u32 format version, u32 header length, JSON
    header, row-major little-endian float32 matrices (embeddings then
    output weights), SHA-256 of everything preceding."""
    header = json.dumps(
        {
            "dim": model.dim,
            "labels": list(model.labels),
            "word_vocab": list(model.word_vocab),
            "extractor": {
                "ngram_len": model.extractor.ngram_len,
                "bucket_count": model.extractor.bucket_count,
                "include_word_tokens": model.extractor.include_word_tokens,
            },
        },
        sort_keys=True,
    ).encode("utf-8")
    body = b"".join(
        (
            MAGIC,
            struct.pack("<I", FORMAT_VERSION),
            struct.pack("<I", len(header)),
            header,
            np.ascontiguousarray(model.embeddings, dtype="<f4").tobytes(),
            np.ascontiguousarray(model.output_weights, dtype="<f4").tobytes(),
        )
    )
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


def load_model(path: str | Path) -> ClassifierModel:
    """Inverse of :func:`save_model`; bad magic, unsupported version,
    truncation, and corruption raise distinct error types."""
    blob = Path(path).read_bytes()
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise ModelLoadError(f"{path}: not a classifier model file")
    version = struct.unpack_from("<I", blob, 4)[0]
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"{path}: format version {version}, this build reads {FORMAT_VERSION}"
        )
    header_len = struct.unpack_from("<I", blob, 8)[0]
    header_end = 12 + header_len
    if len(blob) < header_end:
        raise ModelTruncatedError(f"{path}: header truncated")
    try:
        header = json.loads(blob[12:header_end].decode("utf-8"))
        dim = int(header["dim"])
        labels = tuple(int(c) for c in header["labels"])
        word_vocab = tuple(str(w) for w in header["word_vocab"])
        extractor = FeatureExtractorConfig(**header["extractor"])
    except (KeyError, TypeError, ValueError, UnicodeDecodeError) as exc:
        raise ModelLoadError(f"{path}: malformed header: {exc}") from exc

    rows = extractor.bucket_count + len(word_vocab)
    emb_bytes = rows * dim * 4
    out_bytes = len(labels) * dim * 4
    expected = header_end + emb_bytes + out_bytes + 32
    if len(blob) < expected:
        raise ModelTruncatedError(
            f"{path}: {len(blob)} bytes, format promises {expected}"
        )
    if len(blob) != expected:
        raise ModelLoadError(f"{path}: {len(blob) - expected} trailing bytes")
    body, checksum = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != checksum:
        raise ModelChecksumError(f"{path}: checksum mismatch, file corrupted")

    embeddings = np.frombuffer(
        blob, dtype="<f4", count=rows * dim, offset=header_end
    ).reshape(rows, dim).copy()
    output_weights = np.frombuffer(
        blob, dtype="<f4", count=len(labels) * dim, offset=header_end + emb_bytes
    ).reshape(len(labels), dim).copy()
    return ClassifierModel(
        embeddings=embeddings,
        output_weights=output_weights,
        labels=labels,
        word_vocab=word_vocab,
        extractor=extractor,
    )
