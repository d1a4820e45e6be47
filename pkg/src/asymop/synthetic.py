"""Scripted 12-person fixture corpus with a known hierarchy.

Three managers each lead a team of three; the second and third manager
report to the first. Subordinates write more often, at greater length, in
more fluent sentences and more positively to their superior than to peers,
and superiors write less of all of these downward. For each hierarchy pair
one feature (round robin) is scripted the other way round, so every single
feature misorders some pairs while their combination orders all of them.
Staff also write to their counterparts in the other two teams.

Usage: ``python -m asymop.synthetic DIR [--seed N]`` writes ``corpus.jsonl``,
``ground_truth.csv`` and ``config.json`` into DIR.
"""
from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path

import numpy as np

from .lang_features import FEATURES

log = logging.getLogger(__name__)

DOMAIN = "@enron.com"
T0 = 978307200  # 2001-01-01 UTC
SPAN_DAYS = 60

# per-direction levels: (messages, sentences per message, fluent share, positive share)
LEVELS = {
    "up": {"frequency": 36, "length": 6, "quality": 0.85, "sentiment": 0.7},
    "peer": {"frequency": 26, "length": 4, "quality": 0.5, "sentiment": 0.4},
    "down": {"frequency": 17, "length": 2, "quality": 0.15, "sentiment": 0.1},
}

FLUENT = [
    "please review the attached report before the meeting",
    "i will send the updated numbers by friday",
    "let me know if you have any questions",
    "the schedule for next week is attached",
    "we need to finalize the contract this week",
    "can we discuss the proposal tomorrow morning",
    "i have forwarded the request to the legal team",
    "the call is moved to three in the afternoon",
]
POSITIVE = ["thanks", "great", "appreciate", "good", "glad", "helpful"]
NEGATIVE = ["problem", "delay", "concern"]


def _pseudo_vocab(rng: np.random.Generator, n: int = 400) -> list[str]:
    syl = ["ka", "lo", "mi", "ne", "qu", "ra", "si", "to", "ve", "zu", "bra", "ple", "dro", "fin"]
    words = set()
    while len(words) < n:
        words.add("".join(rng.choice(syl, size=rng.integers(2, 4))))
    return sorted(words)


def hierarchy() -> tuple[list[str], list[tuple[str, str]], list[tuple[str, str]]]:
    """People, superior-subordinate pairs ``(lower, higher)`` and peer pairs."""
    managers = [f"manager{i}{DOMAIN}" for i in (1, 2, 3)]
    teams = [[f"staff{t}{j}{DOMAIN}" for j in (1, 2, 3)] for t in (1, 2, 3)]
    up = [(s, managers[t]) for t in range(3) for s in teams[t]]
    up += [(managers[1], managers[0]), (managers[2], managers[0])]
    peers = [(managers[1], managers[2])]
    # staff talk to their counterparts in the other teams only, which keeps
    # triangles sparse as in real mail graphs
    for j in range(3):
        peers += [(teams[0][j], teams[1][j]), (teams[0][j], teams[2][j]), (teams[1][j], teams[2][j])]
    people = managers + [s for team in teams for s in team]
    return people, up, peers


def _body(rng, vocab, n_sent: int, fluent: float, positive: float) -> str:
    sents = []
    for _ in range(n_sent):
        if rng.random() < fluent:
            words = FLUENT[rng.integers(len(FLUENT))].split()
        else:
            words = list(rng.choice(vocab, size=7))
        if rng.random() < positive:
            words.append(POSITIVE[rng.integers(len(POSITIVE))])
        elif rng.random() < 0.05:
            words.append(NEGATIVE[rng.integers(len(NEGATIVE))])
        sents.append(" ".join(words).capitalize() + ".")
    return " ".join(sents)


def generate_messages(seed: int = 0) -> tuple[list[dict], list[tuple[str, str]]]:
    rng = np.random.default_rng(seed)
    vocab = _pseudo_vocab(rng)
    _, up, peers = hierarchy()
    plans = []  # (sender, recipient, {feature: level name})
    for i, (low, high) in enumerate(up):
        flipped = FEATURES[i % len(FEATURES)]
        plans.append((low, high, {f: "down" if f == flipped else "up" for f in FEATURES}))
        plans.append((high, low, {f: "up" if f == flipped else "down" for f in FEATURES}))
    for a, b in peers:
        plans.append((a, b, {f: "peer" for f in FEATURES}))
        plans.append((b, a, {f: "peer" for f in FEATURES}))
    msgs = []
    for sender, recipient, lv in plans:
        n = LEVELS[lv["frequency"]]["frequency"]
        ts = np.linspace(T0, T0 + SPAN_DAYS * 86400, n).astype(np.int64)
        for k in range(n):
            body = _body(rng, vocab, LEVELS[lv["length"]]["length"], LEVELS[lv["quality"]]["quality"],
                         LEVELS[lv["sentiment"]]["sentiment"])
            msgs.append({"id": f"{sender.split('@')[0]}-{recipient.split('@')[0]}-{k:03d}",
                         "from": sender, "to": [recipient], "ts": int(ts[k]), "body": body})
    msgs.sort(key=lambda m: (m["ts"], m["id"]))
    return msgs, up


def write_fixture(out_dir: str | Path, seed: int = 0) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    msgs, up = generate_messages(seed)
    corpus = out / "corpus.jsonl"
    with open(corpus, "w", encoding="utf-8", newline="\n") as fh:
        for m in msgs:
            fh.write(json.dumps(m, sort_keys=True) + "\n")
    truth = out / "ground_truth.csv"
    with open(truth, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("lower_id,higher_id\n")
        for low, high in up:
            fh.write(f"{low},{high}\n")
    config = out / "config.json"
    cfg = {
        "corpus": "corpus.jsonl",
        "corpus_mode": "jsonl",
        "ground_truth": "ground_truth.csv",
        "output": "out",
        "min_communicators": 3,
        "personality_k": 3,
        "seed": seed,
    }
    with open(config, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %d messages to %s", len(msgs), corpus)
    return {"corpus": corpus, "ground_truth": truth, "config": config}


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="python -m asymop.synthetic", description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    write_fixture(args.out_dir, args.seed)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
