"""Text preprocessing, TF-IDF cosine similarity, and the baseline classifiers.

The index formula is pinned: tf is the raw term count, idf(t) is
ln((1+N)/(1+df(t))) + 1, and vectors are L2-normalized, so independently
written implementations can agree bit-for-bit on small corpora.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import InsufficientDataError, ValidationError
from .ingest import Repository

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_SUFFIXES = ("ing", "ed", "es", "s")  # longest match wins
_MIN_STEM_LEN = 3


def default_stopwords() -> frozenset[str]:
    text = resources.files("linkgraph.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(word.strip().casefold() for word in text.split() if word.strip())


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    stopwords: frozenset[str] = field(default_factory=default_stopwords)
    stemmer: str = "suffix"  # "suffix" | "none"

    def __post_init__(self):
        if self.stemmer not in ("suffix", "none"):
            raise ValidationError(f"stemmer must be 'suffix' or 'none', got {self.stemmer!r}")
        object.__setattr__(self, "stopwords", frozenset(w.casefold() for w in self.stopwords))

    def to_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "stopwords": sorted(self.stopwords),
            "stemmer": self.stemmer,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "TokenizerConfig":
        return cls(
            lowercase=bool(doc.get("lowercase", True)),
            stopwords=frozenset(doc.get("stopwords", default_stopwords())),
            stemmer=doc.get("stemmer", "suffix"),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "TokenizerConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _strip_suffix(token: str) -> str:
    for suffix in _SUFFIXES:
        if token.endswith(suffix) and len(token) - len(suffix) >= _MIN_STEM_LEN:
            return token[: -len(suffix)]
    return token


def preprocess(text: str, cfg: TokenizerConfig) -> list[str]:
    """Tokenize on whitespace/punctuation, fold case, drop stopwords, stem."""
    tokens = _TOKEN_RE.findall(text)
    if cfg.lowercase:
        tokens = [t.casefold() for t in tokens]
    tokens = [t for t in tokens if t.casefold() not in cfg.stopwords]
    if cfg.stemmer == "suffix":
        tokens = [_strip_suffix(t) for t in tokens]
    return tokens


def issue_text(repo: Repository, key: str) -> str:
    issue = repo.issues[key]
    return f"{issue.title}\n{issue.description}"


def build_corpus(repo: Repository) -> dict[str, str]:
    """Document per issue: title concatenated with description."""
    return {key: issue_text(repo, key) for key in sorted(repo.issues)}


def corpus_fingerprint(corpus: Mapping[str, str]) -> str:
    digest = hashlib.sha256()
    for key in sorted(corpus):
        digest.update(key.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(corpus[key].encode("utf-8"))
        digest.update(b"\x01")
    return "sha256:" + digest.hexdigest()


@dataclass(frozen=True)
class TfIdfIndex:
    vocabulary: dict[str, int]
    idf: tuple[float, ...]  # by column index
    vectors: dict[str, dict[int, float]]  # unit L2 norm or empty
    corpus_hash: str


def fit_tfidf(corpus: Mapping[str, str], cfg: TokenizerConfig) -> TfIdfIndex:
    """Index every document; raises when no document yields any token."""
    if not corpus:
        raise InsufficientDataError("fit_tfidf needs at least one document")
    token_lists = {key: preprocess(text, cfg) for key, text in corpus.items()}
    df: dict[str, int] = {}
    for tokens in token_lists.values():
        for token in set(tokens):
            df[token] = df.get(token, 0) + 1
    if not df:
        raise InsufficientDataError("empty vocabulary: every document tokenized to nothing")

    vocabulary = {token: i for i, token in enumerate(sorted(df))}
    n_docs = len(corpus)
    idf = tuple(
        math.log((1 + n_docs) / (1 + df[token])) + 1.0 for token in sorted(df)
    )

    vectors: dict[str, dict[int, float]] = {}
    for key, tokens in token_lists.items():
        counts: dict[int, int] = {}
        for token in tokens:
            counts[vocabulary[token]] = counts.get(vocabulary[token], 0) + 1
        weighted = {col: tf * idf[col] for col, tf in counts.items()}
        norm = math.sqrt(sum(w * w for w in weighted.values()))
        vectors[key] = {col: w / norm for col, w in weighted.items()} if norm else {}
    return TfIdfIndex(
        vocabulary=vocabulary,
        idf=idf,
        vectors=vectors,
        corpus_hash=corpus_fingerprint(corpus),
    )


def pair_similarity(index: TfIdfIndex, a: str, b: str) -> float:
    """Cosine of the two stored unit vectors; 0 when either is empty."""
    try:
        va, vb = index.vectors[a], index.vectors[b]
    except KeyError as exc:
        raise KeyError(f"issue {exc.args[0]!r} is not indexed") from None
    if len(vb) < len(va):
        va, vb = vb, va
    # Summation in column order keeps the result bit-identical under
    # argument swap and index rebuilds.
    return sum(w * vb[col] for col, w in sorted(va.items()) if col in vb)


@dataclass(frozen=True)
class ThresholdClassifier:
    """Predicts a link when pair similarity >= theta."""

    theta: float
    training_f1: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        if not 0 <= self.theta <= 1:
            raise ValidationError("theta must lie in [0, 1]")

    def predict(self, similarity: float) -> int:
        return 1 if similarity >= self.theta else 0


def _f1_at(theta: float, sims: list[float], labels: list[int]) -> float:
    tp = fp = fn = 0
    for sim, label in zip(sims, labels):
        pred = 1 if sim >= theta else 0
        if pred and label:
            tp += 1
        elif pred:
            fp += 1
        elif label:
            fn += 1
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def train_threshold(train_set, index: TfIdfIndex) -> ThresholdClassifier:
    """Pick theta maximizing training F1 of the positive class.

    Candidates are the midpoints between consecutive observed similarities
    plus 0 and 1; ties break toward the larger theta. When every training
    similarity is identical no candidate separates anything: theta is pinned
    at 1.0 and the classifier is flagged degenerate.
    """
    sims = []
    labels = []
    for pair, label in train_set:
        sims.append(pair_similarity(index, pair.a, pair.b))
        labels.append(label)
    if 1 not in labels or 0 not in labels:
        missing = "positive" if 1 not in labels else "negative"
        raise InsufficientDataError(f"training set has no {missing} examples")

    distinct = sorted(set(sims))
    if len(distinct) == 1:
        theta = 1.0
        return ThresholdClassifier(
            theta=theta, training_f1=_f1_at(theta, sims, labels), degenerate=True
        )
    candidates = {0.0, 1.0}
    candidates.update((lo + hi) / 2 for lo, hi in zip(distinct, distinct[1:]))
    best_theta = max(sorted(candidates), key=lambda t: (_f1_at(t, sims, labels), t))
    return ThresholdClassifier(
        theta=best_theta, training_f1=_f1_at(best_theta, sims, labels), degenerate=False
    )


def ktop_retrieve(
    index: TfIdfIndex, query: str, candidates: Iterable[str], k: int
) -> list[tuple[str, float]]:
    """k most similar candidates, descending; ties by ascending key."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    if query not in index.vectors:
        raise KeyError(f"issue {query!r} is not indexed")
    scored = [
        (key, pair_similarity(index, query, key))
        for key in candidates
        if key != query
    ]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


def save_model(
    path: str | Path,
    classifier: ThresholdClassifier,
    cfg: TokenizerConfig,
    corpus_hash: str,
    training_config: str,
    seed: int | None = None,
) -> None:
    doc = {
        "theta": classifier.theta,
        "training_f1": classifier.training_f1,
        "degenerate": classifier.degenerate,
        "tokenizer": cfg.to_dict(),
        "corpus_hash": corpus_hash,
        "training_config": training_config,
        "seed": seed,
    }
    Path(path).write_text(
        json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> tuple[ThresholdClassifier, TokenizerConfig, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    classifier = ThresholdClassifier(
        theta=doc["theta"],
        training_f1=doc.get("training_f1", 0.0),
        degenerate=doc.get("degenerate", False),
    )
    return classifier, TokenizerConfig.from_dict(doc["tokenizer"]), doc
