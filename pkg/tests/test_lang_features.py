import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from asymop.corpus import DirectedPairStats, IngestReport, Message, MessageStore
from asymop.errors import EmptyCorpus, LexiconError, NoScorableSentences
from asymop.lang_features import (SentenceScore, SentimentLexicon, TextStats, bundled_lexicon_path,
                                  frequency_feature, length_feature, load_arpa, load_lexicon, pair_features,
                                  perplexity_score, quality_details, quality_feature, read_features_csv,
                                  sentiment_feature, split_sentences, tokenize, train_ngram_lm,
                                  write_features_csv)

DAY = 86400


class FixedLM:
    """Scores each sentence by a preset perplexity (logprob chosen so that
    10^(-lp/(w+1)) equals it)."""

    def __init__(self, ppl_by_first_token):
        self.ppl = ppl_by_first_token

    def score_sentence(self, tokens):
        if tokens[0] not in self.ppl:
            return SentenceScore(0.0, len(tokens), len(tokens))
        return SentenceScore(-math.log10(self.ppl[tokens[0]]) * (len(tokens) + 1), len(tokens), 0)


def pair(n, days):
    return DirectedPairStats("a", "b", [str(i) for i in range(n)], 0, int(days * DAY))


def test_sentences_and_tokens():
    assert split_sentences("Hi there. Thanks!") == ["Hi there.", "Thanks!"]
    assert tokenize("Don't stop") == ["don't", "stop"]
    assert split_sentences("") == [] and tokenize("") == []
    assert tokenize("'' x") == ["x"]


def test_unigram_add_one():
    lm = train_ngram_lm([["a", "b", "a", "b"]], order=1, k=1, min_count=1)
    assert lm.prob("a") == pytest.approx(3 / 6, abs=1e-15)


def test_oov_excluded():
    lm = train_ngram_lm([["a", "b", "a", "b"]], order=1, k=1, min_count=1)
    sc = lm.score_sentence(["a", "zzz"])
    assert sc.oovs == 1 and sc.words == 2
    assert sc.logprob == pytest.approx(math.log10(0.5))


def test_bigram_hand_table():
    # three copies of "a b", k = 1, |V| = 2:
    #   P(b|a) = (3 + 1) / (3 + 2); history "b" is unseen -> unigram (3 + 1) / (6 + 2)
    lm = train_ngram_lm([["a", "b"]] * 3, order=2, k=1, min_count=1)
    assert lm.prob("b", ["a"]) == pytest.approx(4 / 5, abs=1e-15)
    assert lm.prob("b", ["b"]) == pytest.approx(4 / 8, abs=1e-15)
    assert lm.prob("b", ["a"]) > lm.prob("b", ["b"])
    assert lm.prob("a", ["<s>"]) == pytest.approx(4 / 5, abs=1e-15)


def test_conditionals_sum_to_one():
    rng = random.Random(0)
    streams = [[rng.choice("abcde") for _ in range(6)] for _ in range(40)]
    lm = train_ngram_lm(streams, order=3, k=0.1, min_count=1)
    for hist in (["<s>", "<s>"], ["a", "b"], ["e", "e"], ["zz", "a"]):
        assert math.fsum(lm.prob(w, hist) for w in lm.vocabulary) == pytest.approx(1.0, abs=1e-12)


def test_empty_training():
    with pytest.raises(EmptyCorpus):
        train_ngram_lm([[], []])


def test_perplexity_examples():
    assert perplexity_score(SentenceScore(-6, 5, 1)) == pytest.approx(10 ** 1.2)
    assert perplexity_score(SentenceScore(-6, 5, 1)) == pytest.approx(15.8489, abs=1e-4)
    assert perplexity_score(SentenceScore(0.0, 7, 3)) == 1.0
    assert perplexity_score(SentenceScore(-3, 2, 2)) == pytest.approx(1000.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 0), st.floats(0.01, 10), st.integers(0, 20), st.integers(0, 5))
def test_perplexity_decreasing_in_logprob(lp, delta, words, oovs):
    oovs = min(oovs, words)
    lo, hi = SentenceScore(lp - delta, words, oovs), SentenceScore(lp, words, oovs)
    assert perplexity_score(lo) > perplexity_score(hi)


def test_frequency_examples():
    assert frequency_feature(pair(30, 150.0)) == pytest.approx(0.2)
    assert frequency_feature(pair(1, 0)) == 1.0
    assert frequency_feature(pair(10, 5.0)) == pytest.approx(2.0)


def test_length_examples():
    assert length_feature(TextStats.from_bodies([" ".join(["w"] * 10), " ".join(["w"] * 30)])) == 20.0
    assert length_feature(TextStats.from_bodies([""])) == 0.0
    assert length_feature(TextStats.from_bodies(["one two three four five."] * 3)) == 5.0


def test_quality_examples():
    lm = FixedLM({"x": 100.0, "y": 300.0})
    assert quality_feature(TextStats.from_bodies(["x a. y b."]), lm) == pytest.approx(200.0)
    assert quality_feature(TextStats.from_bodies(["x a b.", "x a b."]), lm) == pytest.approx(100.0)
    with pytest.raises(NoScorableSentences):
        quality_feature(TextStats.from_bodies(["q r s."]), lm)
    assert quality_details(TextStats.from_bodies(["x a. q r."]), lm) == (pytest.approx(100.0), 1)


def test_quality_with_real_model_identical_sentences():
    lm = train_ngram_lm([["a", "b", "c"], ["a", "c"]] * 2, order=3, k=0.1, min_count=1)
    one = perplexity_score(lm.score_sentence(["a", "b", "c"]))
    assert quality_feature(TextStats.from_bodies(["A b c. A b c!"]), lm) == pytest.approx(one)


def test_sentiment_examples():
    lex = SentimentLexicon({"good": 1, "bad": -1, "great": 1})
    assert sentiment_feature(TextStats.from_bodies(["Good day. Bad news. Great. Fine."]), lex) == 0.25
    assert sentiment_feature(TextStats.from_bodies([". ".join(["nothing here"] * 10) + "."]), lex) == 0.0
    assert sentiment_feature(TextStats.from_bodies(["bad bad."]), lex) == -2.0


def test_sentiment_case_insensitive():
    lex = SentimentLexicon({"Good": 1})
    assert lex.score("GOOD") == 1


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.sampled_from(["good", "bad", "great", "awful", "meh", "ok"]), min_size=1, max_size=8),
                min_size=1, max_size=6))
def test_sentiment_antisymmetric(sents):
    lex = SentimentLexicon({"good": 1, "bad": -1, "great": 1, "awful": -1})
    texts = TextStats.from_bodies([" ".join(s) + "." for s in sents])
    assert sentiment_feature(texts, lex.flipped()) == -sentiment_feature(texts, lex)


def test_lexicon_file(tmp_path):
    p = tmp_path / "lex.tsv"
    p.write_text("# comment\ngood\t+1\nBad\t-1\n\n")
    lex = load_lexicon(p)
    assert lex.scores == {"good": 1, "bad": -1}
    p.write_text("good\t+1\ngood\t-1\n")
    with pytest.raises(LexiconError):
        load_lexicon(p)
    p.write_text("good +1\n")
    with pytest.raises(LexiconError):
        load_lexicon(p)
    p.write_text("good\t2\n")
    with pytest.raises(LexiconError):
        load_lexicon(p)


def test_bundled_lexicon():
    lex = load_lexicon(bundled_lexicon_path())
    assert len(lex) == 40
    assert (lex.score("good"), lex.score("bad"), lex.score("great")) == (1, -1, 1)


def _store(bodies, ts):
    msgs = [Message(str(i), "a", ("b",), t, b) for i, (b, t) in enumerate(zip(bodies, ts))]
    return MessageStore(msgs, IngestReport())


def test_duplicating_messages():
    bodies = ["Good morning team. The report is late.", "Thanks for the quick reply!", "See the bad numbers."]
    ts = [0, 3 * DAY, 9 * DAY]
    lm = train_ngram_lm([tokenize(s) for b in bodies for s in split_sentences(b)], order=3, k=0.1, min_count=1)
    lex = load_lexicon(bundled_lexicon_path())
    s1 = _store(bodies, ts)
    p1 = DirectedPairStats("a", "b", [m.id for m in s1], 0, 9 * DAY)
    s2 = _store(bodies * 2, ts * 2)
    p2 = DirectedPairStats("a", "b", [m.id for m in s2], 0, 9 * DAY)
    f1, f2 = pair_features(p1, s1, lm, lex), pair_features(p2, s2, lm, lex)
    assert f2.frequency == 2 * f1.frequency
    assert (f2.length, f2.sentiment) == (f1.length, f1.sentiment)
    assert f2.quality == pytest.approx(f1.quality, rel=1e-12)


def test_add_k_monotonicity():
    # every history the held-out sentence can meet is already seen in the base
    # corpus, so adding the sentence only raises the counts along its path
    vocab = ["a", "b", "c"]
    base = [[x, y, z] for x in vocab for y in vocab for z in vocab]
    rng = random.Random(3)
    for _ in range(60):
        sent = [rng.choice(vocab) for _ in range(rng.randint(1, 7))]
        without = train_ngram_lm(base, order=3, k=0.1, vocabulary=vocab)
        with_ = train_ngram_lm(base + [sent], order=3, k=0.1, vocabulary=vocab)
        texts = TextStats([[sent]])
        assert quality_feature(texts, with_) <= quality_feature(texts, without)


ARPA = """\\data\\
ngram 1=4
ngram 2=2

\\1-grams:
-1.0 </s>
-99 <s> -0.5
-0.7 a -0.3
-0.8 b -0.2

\\2-grams:
-0.2 <s> a
-0.4 a b

\\end\\
"""


def test_arpa_backoff(tmp_path):
    p = tmp_path / "m.arpa"
    p.write_text(ARPA)
    lm = load_arpa(p)
    assert lm.order == 2 and lm.vocabulary == {"a", "b", "</s>"}
    # <s> a: -0.2; a b: -0.4; </s> after b backs off: bo(b) + p(</s>) = -0.2 - 1.0
    sc = lm.score_sentence(["a", "b"])
    assert sc.logprob == pytest.approx(-1.8) and (sc.words, sc.oovs) == (2, 0)
    # b after <s>: bo(<s>) + p(b) = -1.3; c is OOV and resets history; </s>: -1.0
    sc = lm.score_sentence(["b", "c"])
    assert sc.logprob == pytest.approx(-2.3) and sc.oovs == 1
    assert perplexity_score(sc) == pytest.approx(10 ** (2.3 / 2))


def test_features_csv_roundtrip(tmp_path):
    from asymop.lang_features import RawFeatures
    rows = [RawFeatures("a", "b", 0.1, 12.5, 33.3333333333, -0.25), RawFeatures("b", "a", 1 / 3, 0.0, 1.0, 0.0)]
    p = tmp_path / "f.csv"
    with open(p, "w") as fh:
        write_features_csv(rows, fh)
    assert p.read_text().splitlines()[0] == "from,to,frequency,length,quality,sentiment"
    with open(p) as fh:
        assert read_features_csv(fh) == rows
