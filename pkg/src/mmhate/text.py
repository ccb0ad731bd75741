"""Text preprocessing, WordPiece tokenization, and 768-dim embedding providers.

The real encoder lives outside this package (see the exporter under
``exporter/`` and `load_embeddings`); for desk-scale runs a deterministic
stub maps token ids to fixed pseudo-random unit vectors.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

import numpy as np

from . import mmeb
from .errors import ValidationError

TEXT_EMBEDDING_DIM = 768
MAX_SEQUENCE_LENGTH = 128
PAD_ID = 0
CLS_ID = 1
UNK_ID = 2

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_HANDLE_RE = re.compile(r"@\w+")


class PoolingMode(str, Enum):
    CLS = "cls"
    MEAN = "mean"


def preprocess_text(raw: str) -> str:
    """Twitter-style cleanup: drop @handles, URLs, and special characters.

    Keeps alphanumerics, whitespace, '!' and '?'; lowercases (uncased
    convention) and collapses runs of whitespace. Idempotent.
    """
    text = raw.lower()
    text = _URL_RE.sub(" ", text)
    text = _HANDLE_RE.sub(" ", text)
    text = "".join(ch for ch in text if ch.isalnum() or ch.isspace() or ch in "!?")
    return " ".join(text.split())


@dataclass(frozen=True)
class Vocabulary:
    """WordPiece vocabulary; line number in the file is the token id."""

    tokens: tuple

    def __post_init__(self):
        if len(self.tokens) < 3 or self.tokens[0] != "[PAD]" or self.tokens[1] != "[CLS]" or self.tokens[2] != "[UNK]":
            raise ValidationError("vocabulary must start with [PAD], [CLS], [UNK]")
        index = {}
        for token_id, token in enumerate(self.tokens):
            if token in index:
                raise ValidationError(f"duplicate vocabulary token {token!r}")
            index[token] = token_id
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.tokens)

    def lookup(self, token: str):
        return self._index.get(token)

    @staticmethod
    def from_file(path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            tokens = tuple(line.rstrip("\n") for line in fh if line.rstrip("\n"))
        return Vocabulary(tokens=tokens)

    @staticmethod
    def demo() -> "Vocabulary":
        """The small vocabulary shipped with the package (tests, stub runs)."""
        return _demo_vocabulary()


@lru_cache(maxsize=1)
def _demo_vocabulary() -> Vocabulary:
    text = resources.files("mmhate").joinpath("data/vocab.txt").read_text(encoding="utf-8")
    return Vocabulary(tokens=tuple(line for line in text.splitlines() if line))


@dataclass(frozen=True)
class TokenSequence:
    """Fixed-length id sequence: [CLS], sub-words, zero padding."""

    token_ids: tuple
    attention_length: int

    def __post_init__(self):
        ids = tuple(int(i) for i in self.token_ids)
        object.__setattr__(self, "token_ids", ids)
        if len(ids) != MAX_SEQUENCE_LENGTH:
            raise ValidationError(f"token sequence must have length {MAX_SEQUENCE_LENGTH}")
        if ids[0] != CLS_ID:
            raise ValidationError("token sequence must start with [CLS]")
        if not 1 <= self.attention_length <= MAX_SEQUENCE_LENGTH:
            raise ValidationError("attention_length out of range")
        if any(i != PAD_ID for i in ids[self.attention_length :]):
            raise ValidationError("padding must be [PAD] ids")
        if any(i < 0 for i in ids):
            raise ValidationError("token ids must be non-negative")

    @property
    def has_cls(self) -> bool:
        return True

    @property
    def content_ids(self) -> tuple:
        return self.token_ids[: self.attention_length]


def _wordpiece(word: str, vocab: Vocabulary) -> list:
    """Greedy longest-match pieces; any unmatched span maps the word to [UNK]."""
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        piece_id = None
        while end > start:
            candidate = word[start:end] if start == 0 else "##" + word[start:end]
            piece_id = vocab.lookup(candidate)
            if piece_id is not None:
                break
            end -= 1
        if piece_id is None:
            return [UNK_ID]
        pieces.append(piece_id)
        start = end
    return pieces


_WORD_RE = re.compile(r"[!?]|[^!?\s]+")


def tokenize(text: str, vocab: Vocabulary) -> TokenSequence:
    """Sub-word ids with [CLS] prepended, truncated/padded to 128."""
    ids = [CLS_ID]
    for word in _WORD_RE.findall(text):
        ids.extend(_wordpiece(word, vocab))
        if len(ids) >= MAX_SEQUENCE_LENGTH:
            break
    ids = ids[:MAX_SEQUENCE_LENGTH]
    attention_length = len(ids)
    ids.extend([PAD_ID] * (MAX_SEQUENCE_LENGTH - len(ids)))
    return TokenSequence(token_ids=tuple(ids), attention_length=attention_length)


@dataclass(frozen=True)
class TextEmbedding:
    values: np.ndarray
    mode: PoolingMode
    provider_tag: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "values", values)
        if values.size != TEXT_EMBEDDING_DIM:
            raise ValidationError(f"text embedding must have length {TEXT_EMBEDDING_DIM}, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("text embedding must be finite")


def _unit_vector(seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    v = rng.standard_normal(TEXT_EMBEDDING_DIM)
    return v / np.linalg.norm(v)


@lru_cache(maxsize=8192)
def _token_unit_vector(token_id: int) -> np.ndarray:
    return _unit_vector(token_id)


def _sequence_hash(ids) -> int:
    digest = hashlib.blake2b(b"cls:" + b"".join(int(i).to_bytes(4, "little") for i in ids), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def stub_embed(seq: TokenSequence, mode: PoolingMode) -> TextEmbedding:
    """Deterministic stand-in for a pretrained encoder.

    Mean mode averages fixed unit vectors of the non-pad token ids;
    CLS mode hashes the full non-pad id sequence so it reflects
    whole-sequence identity (and token order).
    """
    mode = PoolingMode(mode)
    if mode is PoolingMode.MEAN:
        vectors = [_token_unit_vector(i) for i in seq.content_ids]
        values = np.mean(vectors, axis=0)
    else:
        values = _unit_vector(_sequence_hash(seq.content_ids))
    return TextEmbedding(values=values, mode=mode, provider_tag="stub")


def load_embeddings(path, mode: PoolingMode = PoolingMode.CLS) -> dict:
    """Load a 768-dim embedding file into {id: TextEmbedding}."""
    raw = mmeb.read_embedding_file(path, expected_dim=TEXT_EMBEDDING_DIM)
    return {
        record_id: TextEmbedding(values=values.astype(np.float64), mode=mode, provider_tag="file")
        for record_id, values in raw.items()
    }


def embed_transcript(transcript: str, vocab: Vocabulary, mode: PoolingMode) -> TextEmbedding:
    """preprocess -> tokenize -> stub embedding, in one call."""
    return stub_embed(tokenize(preprocess_text(transcript), vocab), mode)
