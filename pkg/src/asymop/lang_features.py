"""Per-direction language features: frequency, length, quality (sentence
perplexity under an n-gram model) and lexicon sentiment."""
from __future__ import annotations

import csv
import gzip
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import DirectedPairStats, MessageStore
from .errors import EmptyCorpus, IoFailure, LexiconError, NoScorableSentences

log = logging.getLogger(__name__)

FEATURES = ("frequency", "length", "quality", "sentiment")
SECONDS_PER_DAY = 86400.0

_SENT_END_RE = re.compile(r"(?<=[.?!])(?:\s+|$)")
_TOKEN_RE = re.compile(r"[A-Za-z0-9']+")

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


def split_sentences(text: str) -> list[str]:
    """Split on ``.``, ``?`` or ``!`` followed by whitespace or end of text."""
    if not text:
        return []
    parts = (p.strip() for p in _SENT_END_RE.split(text))
    return [p for p in parts if p]


def tokenize(sentence: str) -> list[str]:
    return [t.lower() for t in _TOKEN_RE.findall(sentence) if t.strip("'")]


@dataclass(frozen=True)
class SentenceScore:
    logprob: float
    words: int
    oovs: int


def perplexity_score(s: SentenceScore) -> float:
    """``10 ** (-logprob / (words - oovs + 1))``."""
    return 10.0 ** (-s.logprob / (s.words - s.oovs + 1))


class LanguageModel:
    """Add-k n-gram model with backoff to shorter histories.

    A history that was seen in training gives ``(c(h, w) + k) / (c(h) + k|V|)``;
    an unseen history backs off to the next shorter one, ending at the add-k
    unigram. Each conditional therefore sums to one over the vocabulary. Out of
    vocabulary tokens are not scored but still count as history (as ``<unk>``).
    Sentence starts are padded with ``<s>``; no end token is predicted.
    """

    def __init__(self, order: int, k: float, vocabulary: frozenset[str], counts: list[Counter],
                 context_totals: list[Counter]):
        self.order = order
        self.k = k
        self.vocabulary = vocabulary
        self._counts = counts
        self._ctx = context_totals
        self._v = len(vocabulary)

    def __contains__(self, token: str) -> bool:
        return token in self.vocabulary

    def prob(self, word: str, history: Sequence[str] = ()) -> float:
        hist = tuple(history)[-(self.order - 1):] if self.order > 1 else ()
        kv = self.k * self._v
        for n in range(len(hist), 0, -1):
            h = hist[-n:]
            total = self._ctx[n].get(h, 0)
            if total:
                return (self._counts[n].get(h + (word,), 0) + self.k) / (total + kv)
        return (self._counts[0].get((word,), 0) + self.k) / (self._ctx[0][()] + kv)

    def score_sentence(self, tokens: Sequence[str]) -> SentenceScore:
        hist: list[str] = [BOS] * (self.order - 1)
        logprob = 0.0
        oovs = 0
        for tok in tokens:
            if tok in self.vocabulary:
                logprob += math.log10(self.prob(tok, hist))
                hist.append(tok)
            else:
                oovs += 1
                hist.append(UNK)
        return SentenceScore(logprob, len(tokens), oovs)


def train_ngram_lm(streams: Iterable[Sequence[str]], order: int = 3, k: float = 0.1, min_count: int = 2,
                   vocabulary: Iterable[str] | None = None) -> LanguageModel:
    """Train on token streams (one per sentence).

    ``vocabulary`` pins the vocabulary instead of deriving it from
    ``min_count``; rarer training tokens become ``<unk>`` history.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if k <= 0:
        raise ValueError("k must be > 0")
    streams = [list(s) for s in streams]
    streams = [s for s in streams if s]
    if not streams:
        raise EmptyCorpus("cannot train a language model on an empty corpus")
    if vocabulary is None:
        freq = Counter(t for s in streams for t in s)
        vocab = frozenset(t for t, c in freq.items() if c >= min_count)
    else:
        vocab = frozenset(vocabulary)
    if not vocab:
        raise EmptyCorpus(f"no token reaches min_count={min_count}")

    counts = [Counter() for _ in range(order)]
    ctx = [Counter() for _ in range(order)]
    for s in streams:
        seq = [BOS] * (order - 1) + [t if t in vocab else UNK for t in s]
        for i in range(order - 1, len(seq)):
            w = seq[i]
            if w == UNK:
                continue  # OOV continuations are never scored
            counts[0][(w,)] += 1
            ctx[0][()] += 1
            for n in range(1, order):
                h = tuple(seq[i - n:i])
                counts[n][h + (w,)] += 1
                ctx[n][h] += 1
    if not ctx[0][()]:
        raise EmptyCorpus("no in-vocabulary tokens in training corpus")
    return LanguageModel(order, k, vocab, counts, ctx)


class ArpaModel:
    """Read-only ARPA backoff model scored the way SRILM's ``-ppl`` does:
    ``<s>`` history, ``</s>`` predicted when present in the file, OOVs skipped."""

    def __init__(self, logprobs: dict[tuple[str, ...], float], backoffs: dict[tuple[str, ...], float], order: int):
        self.order = order
        self._lp = logprobs
        self._bo = backoffs
        self.vocabulary = frozenset(w[0] for w in logprobs if len(w) == 1) - {BOS, UNK}

    def __contains__(self, token: str) -> bool:
        return token in self.vocabulary

    def log10_prob(self, word: str, history: Sequence[str]) -> float:
        hist = tuple(history)[-(self.order - 1):] if self.order > 1 else ()
        penalty = 0.0
        while True:
            lp = self._lp.get(hist + (word,))
            if lp is not None:
                return penalty + lp
            if not hist:
                return penalty + self._lp.get((UNK,), -99.0)
            penalty += self._bo.get(hist, 0.0)
            hist = hist[1:]

    def score_sentence(self, tokens: Sequence[str]) -> SentenceScore:
        hist = [BOS]
        logprob = 0.0
        oovs = 0
        for tok in tokens:
            if tok in self.vocabulary:
                logprob += self.log10_prob(tok, hist)
                hist.append(tok)
            else:
                oovs += 1
                hist = [UNK]  # SRILM resets context after an OOV
        if (EOS,) in self._lp:
            logprob += self.log10_prob(EOS, hist)
        return SentenceScore(logprob, len(tokens), oovs)


def load_arpa(path: str | Path) -> ArpaModel:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    try:
        fh = opener(path, "rt", encoding="utf-8", errors="replace")
    except OSError as exc:
        raise IoFailure(path, str(exc)) from exc
    logprobs: dict = {}
    backoffs: dict = {}
    order = 0
    section = None
    with fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            m = re.match(r"^\\(\d+)-grams:$", line)
            if m:
                section = int(m.group(1))
                order = max(order, section)
                continue
            if line.startswith("\\"):
                section = None
                continue
            if section is None:
                continue
            parts = line.split()
            lp = float(parts[0])
            gram = tuple(parts[1:1 + section])
            logprobs[gram] = lp
            if len(parts) > 1 + section:
                backoffs[gram] = float(parts[1 + section])
    if not order:
        raise IoFailure(path, "no n-gram sections found")
    return ArpaModel(logprobs, backoffs, order)


@dataclass
class SentimentLexicon:
    scores: dict[str, int]

    def __post_init__(self):
        lowered: dict[str, int] = {}
        for tok, val in self.scores.items():
            tok = tok.lower()
            if val not in (1, -1):
                raise LexiconError(f"score for {tok!r} must be +1 or -1, got {val}")
            if lowered.get(tok, val) != val:
                raise LexiconError(f"token {tok!r} listed with both signs")
            lowered[tok] = val
        self.scores = lowered

    def __len__(self) -> int:
        return len(self.scores)

    def score(self, token: str) -> int:
        return self.scores.get(token.lower(), 0)

    def flipped(self) -> "SentimentLexicon":
        return SentimentLexicon({t: -v for t, v in self.scores.items()})


def load_lexicon(path: str | Path) -> SentimentLexicon:
    """Read ``token<TAB>+1|-1`` lines. Blank lines and ``#`` comments skipped."""
    path = Path(path)
    scores: dict[str, int] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(path, str(exc)) from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            try:
                tok, val = line.split("\t")
                ival = int(val.strip())
            except ValueError as exc:
                raise LexiconError(f"{path}:{lineno}: expected 'token<TAB>score'") from exc
            tok = tok.strip().lower()
            if tok in scores and scores[tok] != ival:
                raise LexiconError(f"{path}:{lineno}: token {tok!r} listed with both signs")
            scores[tok] = ival
    if not scores:
        raise LexiconError(f"{path}: empty lexicon")
    return SentimentLexicon(scores)


def bundled_lexicon_path() -> Path:
    return Path(__file__).parent / "data" / "lexicon_small.tsv"


# -- per-pair features -------------------------------------------------------

@dataclass
class TextStats:
    """Tokenized view of one direction's messages, computed once per pair."""
    messages: list[list[list[str]]] = field(default_factory=list)  # message -> sentence -> tokens

    @classmethod
    def from_bodies(cls, bodies: Iterable[str]) -> "TextStats":
        msgs = []
        for body in bodies:
            sents = [tokenize(s) for s in split_sentences(body)]
            msgs.append([s for s in sents if s])
        return cls(msgs)


def _texts(p: DirectedPairStats, store: MessageStore) -> TextStats:
    return TextStats.from_bodies(store.get(mid).body for mid in p.messages)


def frequency_feature(p: DirectedPairStats) -> float:
    """Messages per day; the span is floored at one day."""
    days = (p.last_ts - p.first_ts) / SECONDS_PER_DAY
    return p.count / max(1.0, days)


def length_feature(texts: TextStats) -> float:
    n = len(texts.messages)
    return sum(len(tok) for msg in texts.messages for tok in msg) / n


def quality_feature(texts: TextStats, lm) -> float:
    """Mean sentence perplexity; sentences without any in-vocabulary token are skipped."""
    return quality_details(texts, lm)[0]


def quality_details(texts: TextStats, lm) -> tuple[float, int]:
    """``(mean perplexity, skipped sentence count)``."""
    total = 0.0
    scored = 0
    skipped = 0
    for msg in texts.messages:
        for sent in msg:
            sc = lm.score_sentence(sent)
            if sc.words - sc.oovs <= 0:
                skipped += 1
                continue
            total += perplexity_score(sc)
            scored += 1
    if not scored:
        raise NoScorableSentences(f"all {skipped} sentence(s) are out of vocabulary")
    return total / scored, skipped


def sentiment_feature(texts: TextStats, lex: SentimentLexicon) -> float:
    n_sent = sum(len(msg) for msg in texts.messages)
    if not n_sent:
        raise NoScorableSentences("no sentences to score sentiment over")
    total = sum(lex.score(t) for msg in texts.messages for sent in msg for t in sent)
    return total / n_sent


@dataclass
class RawFeatures:
    sender: str
    recipient: str
    frequency: float
    length: float
    quality: float
    sentiment: float

    def as_dict(self) -> dict[str, float]:
        return {f: getattr(self, f) for f in FEATURES}


def pair_features(p: DirectedPairStats, store: MessageStore, lm, lex: SentimentLexicon) -> RawFeatures:
    texts = _texts(p, store)
    quality = quality_feature(texts, lm)
    return RawFeatures(p.sender, p.recipient, frequency_feature(p), length_feature(texts),
                       quality, sentiment_feature(texts, lex))


def corpus_sentences(store: MessageStore) -> Iterable[list[str]]:
    for m in store:
        for s in split_sentences(m.body):
            toks = tokenize(s)
            if toks:
                yield toks


def extract_features(pairs: Sequence[DirectedPairStats], store: MessageStore, lm,
                     lex: SentimentLexicon) -> tuple[list[RawFeatures], dict[tuple[str, str], str]]:
    """Features for every pair; pairs whose features are undefined are returned
    in the second value with the reason instead of raising."""
    out = []
    dropped = {}
    for p in pairs:
        try:
            out.append(pair_features(p, store, lm, lex))
        except NoScorableSentences as exc:
            dropped[(p.sender, p.recipient)] = str(exc)
    if dropped:
        log.warning("%d pair(s) have undefined features and are dropped", len(dropped))
    return out, dropped


def write_features_csv(rows: Sequence[RawFeatures], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["from", "to", *FEATURES])
    for r in rows:
        w.writerow([r.sender, r.recipient, *(repr(float(getattr(r, f))) for f in FEATURES)])


def read_features_csv(lines: Iterable[str]) -> list[RawFeatures]:
    rows = []
    for rec in csv.DictReader(lines):
        rows.append(RawFeatures(rec["from"], rec["to"], *(float(rec[f]) for f in FEATURES)))
    return rows
