"""Semantic similarity between syllabus texts.

Pure token overlap misses related phrasing: "graph theory" and "multigraph
model" share no words yet describe neighbouring topics. Two signals are
combined per word pair and the stronger one wins:

* a latent space trained on the syllabus corpus itself (TF-IDF counts
  factored by truncated SVD; a word's vector is its row of U*S), scored by
  cosine and clamped to [0, 1];
* a lexical knowledge base of synonym sets and hypernym links, scoring 1.0
  for the same word or a shared synonym set and 0.9 for sets one hypernym
  step apart.

Document similarity is a bidirectional greedy alignment: every distinct
token of one text takes its best match in the other, matches are averaged
with IDF weights, and the two directions are averaged. Scores always land
in [0, 1].
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CorpusError, KBFormatError, RankError
from .stoplist import ENGLISH_STOPWORDS

_WORD_RE = re.compile(r"[a-z]+")

DEFAULT_MAX_RANK = 150


def preprocess(text: str, extra_stopwords: frozenset[str] = frozenset()) -> list[str]:
    """Lowercase, keep alphabetic runs of length >= 2, drop stopwords."""
    return [
        tok
        for tok in _WORD_RE.findall(text.lower())
        if len(tok) >= 2 and tok not in ENGLISH_STOPWORDS and tok not in extra_stopwords
    ]


class LexicalKB:
    """Synonym sets plus hypernym/hyponym links between sets.

    File format, one relation per line (blank lines and # comments allowed):

        syn: word1 word2 word3 ...   defines a synonym set
        hyp: wordA wordB             links every set containing wordA with
                                     every set containing wordB

    A word named by a hyp: line that belongs to no synonym set gets a
    singleton set of its own. Links are stored symmetrically, so hypernym
    and hyponym directions score alike.
    """

    def __init__(self):
        self._sets_of: dict[str, frozenset[int]] = {}
        self._adjacent: dict[int, frozenset[int]] = {}

    @classmethod
    def from_lines(cls, lines: Iterable[str], path=None) -> "LexicalKB":
        sets_of: dict[str, set[int]] = {}
        adjacent: dict[int, set[int]] = {}
        next_id = 0

        def ensure_set(word: str) -> None:
            nonlocal next_id
            if word not in sets_of:
                sets_of[word] = {next_id}
                next_id += 1

        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("syn:"):
                words = [w.lower() for w in line[4:].split()]
                if not words:
                    raise KBFormatError("syn line names no words", path=path, line=lineno)
                set_id = next_id
                next_id += 1
                for w in words:
                    sets_of.setdefault(w, set()).add(set_id)
            elif line.startswith("hyp:"):
                words = [w.lower() for w in line[4:].split()]
                if len(words) != 2:
                    raise KBFormatError(
                        "hyp line must name exactly two words", path=path, line=lineno
                    )
                for w in words:
                    ensure_set(w)
                for a in sets_of[words[0]]:
                    for b in sets_of[words[1]]:
                        adjacent.setdefault(a, set()).add(b)
                        adjacent.setdefault(b, set()).add(a)
            else:
                raise KBFormatError(
                    f"unknown line prefix {line.split(':', 1)[0] + ':'!r}",
                    path=path,
                    line=lineno,
                )

        kb = cls()
        kb._sets_of = {w: frozenset(ids) for w, ids in sets_of.items()}
        kb._adjacent = {sid: frozenset(ids) for sid, ids in adjacent.items()}
        return kb

    @classmethod
    def load(cls, path) -> "LexicalKB":
        text = Path(path).read_text(encoding="utf-8")
        return cls.from_lines(text.splitlines(), path=path)

    def synsets_of(self, word: str) -> frozenset[int]:
        return self._sets_of.get(word, frozenset())

    def neighbours_of(self, set_ids: Iterable[int]) -> frozenset[int]:
        out: set[int] = set()
        for sid in set_ids:
            out |= self._adjacent.get(sid, frozenset())
        return frozenset(out)

    def relation_score(self, w1: str, w2: str) -> float:
        """1.0 for a shared synonym set, 0.9 for sets one link apart, else 0."""
        s1 = self.synsets_of(w1)
        if not s1:
            return 0.0
        s2 = self.synsets_of(w2)
        if not s2:
            return 0.0
        if s1 & s2:
            return 1.0
        if self.neighbours_of(s1) & s2:
            return 0.9
        return 0.0

    def __len__(self) -> int:
        return len(self._sets_of)


@dataclass
class LsaModel:
    """Latent term space from a truncated SVD of a TF-IDF matrix.

    ``term_vectors`` holds one row per vocabulary word (the U*S rows);
    ``doc_vectors`` holds the right singular vectors, one row per document,
    so ``term_vectors @ doc_vectors.T`` reconstructs the rank-k TF-IDF
    matrix. Immutable after construction apart from a cached normalisation.
    """

    vocabulary: dict[str, int]
    term_vectors: np.ndarray
    singular_values: np.ndarray
    doc_vectors: np.ndarray
    idf: np.ndarray
    n_documents: int
    _unit: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def rank(self) -> int:
        return int(self.singular_values.shape[0])

    @property
    def unit_term_vectors(self) -> np.ndarray:
        """Rows normalised to unit length; zero rows stay zero."""
        if self._unit is None:
            norms = np.linalg.norm(self.term_vectors, axis=1, keepdims=True)
            self._unit = self.term_vectors / np.where(norms == 0.0, 1.0, norms)
        return self._unit

    def term_vector(self, word: str) -> Optional[np.ndarray]:
        idx = self.vocabulary.get(word)
        return None if idx is None else self.term_vectors[idx]

    def idf_weight(self, word: str) -> float:
        """IDF of a known word; unknown words weigh like a df=1 word."""
        idx = self.vocabulary.get(word)
        if idx is None:
            return math.log(self.n_documents) if self.n_documents > 1 else 0.0
        return float(self.idf[idx])

    def reconstruction(self) -> np.ndarray:
        return self.term_vectors @ self.doc_vectors.T


def tfidf_matrix(
    corpus: Sequence[Sequence[str]],
) -> tuple[dict[str, int], sp.csr_matrix, np.ndarray]:
    """TF-IDF weighted term-document matrix (terms as rows).

    Term frequency is the raw in-document count; IDF is ln(N/df), so a word
    present in every document weighs zero.
    """
    if not corpus:
        raise CorpusError("empty corpus")
    vocab = {w: i for i, w in enumerate(sorted({w for doc in corpus for w in doc}))}
    if not vocab:
        raise CorpusError("corpus contains no tokens")

    rows, cols, data = [], [], []
    for doc_idx, doc in enumerate(corpus):
        for word, count in Counter(doc).items():
            rows.append(vocab[word])
            cols.append(doc_idx)
            data.append(float(count))
    counts = sp.csr_matrix(
        (data, (rows, cols)), shape=(len(vocab), len(corpus)), dtype=np.float64
    )
    df = np.diff(counts.indptr)  # one entry per (word, document) pair
    idf = np.log(len(corpus) / df)
    weighted = counts.multiply(idf[:, np.newaxis]).tocsr()
    return vocab, weighted, idf


def default_rank(n_documents: int, vocabulary_size: int) -> int:
    rank = min(DEFAULT_MAX_RANK, n_documents - 1, vocabulary_size - 1)
    return max(1, rank)


def build_lsa(corpus: Sequence[Sequence[str]], rank: int) -> LsaModel:
    """Factor the corpus TF-IDF matrix at the given rank.

    The decomposition goes through the document Gram matrix, which is
    deterministic and never materialises a dense term-by-document array.
    Singular vector signs are fixed so repeated builds are bit-identical.
    """
    vocab, weighted, idf = tfidf_matrix(corpus)
    n_docs = len(corpus)
    limit = min(len(vocab), n_docs)
    if not 1 <= rank <= limit:
        raise RankError(
            f"rank {rank} outside [1, {limit}] for {n_docs} documents and "
            f"{len(vocab)} terms"
        )

    gram = (weighted.T @ weighted).toarray()
    eigenvalues, eigenvectors = np.linalg.eigh(gram)  # ascending order
    take = np.arange(n_docs - 1, n_docs - 1 - rank, -1)
    singular = np.sqrt(np.clip(eigenvalues[take], 0.0, None))
    doc_vectors = eigenvectors[:, take].copy()

    # Deterministic sign convention: the largest-magnitude component of
    # each right singular vector is made positive.
    anchors = np.abs(doc_vectors).argmax(axis=0)
    signs = np.sign(doc_vectors[anchors, np.arange(rank)])
    signs[signs == 0.0] = 1.0
    doc_vectors *= signs

    term_vectors = np.asarray(weighted @ doc_vectors)
    return LsaModel(
        vocabulary=vocab,
        term_vectors=term_vectors,
        singular_values=singular,
        doc_vectors=doc_vectors,
        idf=idf,
        n_documents=n_docs,
    )


def term_similarity(
    model: LsaModel, kb: Optional[LexicalKB], w1: str, w2: str
) -> float:
    """Similarity of two words in [0, 1]: the stronger of the latent cosine
    (clamped at 0) and the lexical relation score. Identical words score 1
    regardless of either source."""
    if w1 == w2:
        return 1.0
    lexical = kb.relation_score(w1, w2) if kb is not None else 0.0
    if lexical >= 1.0:
        return 1.0
    i = model.vocabulary.get(w1)
    j = model.vocabulary.get(w2)
    latent = 0.0
    if i is not None and j is not None:
        unit = model.unit_term_vectors
        latent = float(np.dot(unit[i], unit[j]))
        latent = min(1.0, max(0.0, latent))
    return max(latent, lexical)


@dataclass
class TextProfile:
    """Precomputed per-text data for fast pairwise alignment."""

    words: list[str]
    positions: dict[str, int]
    unit: np.ndarray  # (n_words, rank) unit vectors, zero rows for unknowns
    weights: np.ndarray  # IDF weight per word
    kb_terms: list[tuple[int, frozenset[int], frozenset[int]]]


def profile(
    model: LsaModel, kb: Optional[LexicalKB], tokens: Sequence[str]
) -> TextProfile:
    """Profile a token list: distinct words in first-occurrence order with
    their unit vectors, IDF weights and synonym-set memberships."""
    words = list(dict.fromkeys(tokens))
    positions = {w: i for i, w in enumerate(words)}
    unit = np.zeros((len(words), model.rank))
    all_units = model.unit_term_vectors
    for pos, word in enumerate(words):
        idx = model.vocabulary.get(word)
        if idx is not None:
            unit[pos] = all_units[idx]
    weights = np.array([model.idf_weight(w) for w in words], dtype=np.float64)
    kb_terms = []
    if kb is not None:
        for pos, word in enumerate(words):
            synsets = kb.synsets_of(word)
            if synsets:
                kb_terms.append((pos, synsets, kb.neighbours_of(synsets)))
    return TextProfile(words, positions, unit, weights, kb_terms)


def _pair_matrix(a: TextProfile, b: TextProfile) -> np.ndarray:
    sims = a.unit @ b.unit.T
    np.clip(sims, 0.0, 1.0, out=sims)
    # Exact word matches pin the cell to 1.
    if len(a.positions) <= len(b.positions):
        for word, i in a.positions.items():
            j = b.positions.get(word)
            if j is not None:
                sims[i, j] = 1.0
    else:
        for word, j in b.positions.items():
            i = a.positions.get(word)
            if i is not None:
                sims[i, j] = 1.0
    if a.kb_terms and b.kb_terms:
        for i, sets_a, near_a in a.kb_terms:
            for j, sets_b, _ in b.kb_terms:
                current = sims[i, j]
                if current >= 1.0:
                    continue
                if sets_a & sets_b:
                    sims[i, j] = 1.0
                elif current < 0.9 and near_a & sets_b:
                    sims[i, j] = 0.9
    return sims


def _weighted_mean(values: np.ndarray, weights: np.ndarray) -> float:
    denominator = float(weights.sum())
    if denominator > 0.0:
        return float((weights * values).sum()) / denominator
    return float(values.mean())


def profile_similarity(a: TextProfile, b: TextProfile) -> float:
    """Alignment score of two profiled texts, in [0, 1]."""
    if not a.words or not b.words:
        return 0.0
    sims = _pair_matrix(a, b)
    forward = _weighted_mean(sims.max(axis=1), a.weights)
    backward = _weighted_mean(sims.max(axis=0), b.weights)
    score = 0.5 * (forward + backward)
    return min(1.0, max(0.0, score))


def doc_similarity(
    model: LsaModel,
    kb: Optional[LexicalKB],
    a: Sequence[str],
    b: Sequence[str],
) -> float:
    """Similarity of two token lists in [0, 1]; empty against anything is 0."""
    if not a or not b:
        return 0.0
    return profile_similarity(profile(model, kb, a), profile(model, kb, b))
