"""Pipeline stages. Each stage reads the previous stages' artifacts from the
output directory and writes its own, so ``all`` and a manual chain of the
individual stages produce the same files."""
from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .analysis import (DEFAULT_THRESHOLDS, PERSONALITY_GROUPS, bidirectional_stats, evaluate_precision,
                       personality_analysis, read_ground_truth)
from .balance import CostParams, balanced_table_rows, objective_breakdown
from .corpus import Message, MessageStore, IngestReport, aggregate_pairs, ingest_corpus
from .errors import ConfigError, EmptyCorpus, MissingArtifact
from .habit import EdgeFeatureVector, HabitProfile, habit_deviation_stats
from .lang_features import (FEATURES, RawFeatures, bundled_lexicon_path, corpus_sentences, extract_features,
                            load_arpa, load_lexicon, read_features_csv, train_ngram_lm)
from .relgraph import (EQUAL_WEIGHTS, DirectedTriangle, InteractionGraph, attach_features, build_graph,
                       edge_prediction, enumerate_directed_triangles, fuse_scores, select_mutual_pairs)
from .solver import SolverConfig, solve_arrays

log = logging.getLogger(__name__)

DEFAULT_CONFIG = {
    "corpus": None,
    "corpus_mode": "auto",
    "domain_filter": "@enron.com",
    "workers": 1,
    "min_messages": 15,
    "min_communicators": 5,
    "lexicon": None,
    "lm": {"order": 3, "k": 0.1, "min_count": 2, "arpa": None},
    "weights": dict(EQUAL_WEIGHTS),
    "cost": {"lam1": 1.0, "lam0": 1.0, "t1": 1.0, "t2": 1.0},
    "solver": {"max_iters": 5000, "eta0": 0.1, "tol": 1e-6, "patience": 50, "restarts": 8, "init": "corner"},
    "thresholds": list(DEFAULT_THRESHOLDS),
    "personality_k": 10,
    "ground_truth": None,
    "output": "out",
    "seed": 0,
}

PATH_KEYS = ("corpus", "lexicon", "ground_truth", "output")


@dataclass(frozen=True)
class Preset:
    name: str
    model: str
    weights: dict | None  # None: configured fusion weights
    structural: bool


PRESETS = {
    "frequency": Preset("frequency", "Frequency", {"frequency": 1.0}, False),
    "length": Preset("length", "Length", {"length": 1.0}, False),
    "quality": Preset("quality", "Quality", {"quality": 1.0}, False),
    "sentiment": Preset("sentiment", "Sentiment", {"sentiment": 1.0}, False),
    "language_features": Preset("language_features", "Language_Features", None, False),
    "full": Preset("full", "Language_Features+Structural_Feature", None, True),
}


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k not in out and where != "weights":
            raise ConfigError(f"unknown config key {where + '.' if where else ''}{k}")
        if isinstance(out.get(k), dict) and isinstance(v, dict) and k != "weights":
            out[k] = _merge(out[k], v, k)
        else:
            out[k] = v
    return out


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def load_config(path: str | Path | None = None, overrides: list[str] = ()) -> tuple[dict, Path]:
    """Defaults <- JSON file <- ``key.sub=value`` overrides. Relative paths are
    resolved against the config file's directory (or the cwd)."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        cfg = _merge(cfg, user)
        base = path.resolve().parent
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = cfg
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                raise ConfigError(f"unknown config key {key}")
            node = node[p]
        if parts[-1] not in node and parts[0] != "weights":
            raise ConfigError(f"unknown config key {key}")
        node[parts[-1]] = _parse_value(raw)
    return cfg, base


def resolve(cfg: dict, base: Path, key: str) -> Path | None:
    v = cfg.get(key)
    if v is None:
        return None
    p = Path(v)
    return p if p.is_absolute() else (base / p)


def echo(cfg: dict) -> dict:
    """Config as recorded in artifact headers (the output location excluded)."""
    return {k: v for k, v in cfg.items() if k != "output"}


def cost_params(cfg: dict) -> CostParams:
    c = cfg["cost"]
    return CostParams(float(c["lam1"]), float(c["lam0"]), float(c["t1"]), float(c["t2"]))


def solver_config(cfg: dict, params: CostParams) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(int(s["max_iters"]), float(s["eta0"]), float(s["tol"]), int(s["patience"]),
                        int(s["restarts"]), int(cfg["seed"]), params, str(s.get("init", "corner")))


class Run:
    """Resolved config plus the output directory."""

    def __init__(self, cfg: dict, base: Path):
        self.cfg = cfg
        self.base = base
        self.out = resolve(cfg, base, "output")
        self.out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.out / name

    def meta(self, artifact: str, extra: dict | None = None) -> dict:
        return io.metadata(echo(self.cfg), artifact, extra)


# -- artifact loaders -----------------------------------------------------------

def load_store(run: Run) -> MessageStore:
    path = io.require(run.path("messages.jsonl"))
    msgs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            if "_meta" in rec:
                continue
            msgs.append(Message(rec["id"], rec["from"], tuple(rec["to"]), int(rec["ts"]), rec["body"]))
    if not msgs:
        raise EmptyCorpus(f"{path} holds no messages")
    return MessageStore(msgs, IngestReport(len(msgs), len(msgs)))


def load_graph(run: Run) -> tuple[InteractionGraph, list[DirectedTriangle]]:
    edges_rows = io.read_csv(run.path("graph.csv"))
    norm_rows = io.read_csv(run.path("normalized.csv"))
    edges = [(r["from"], r["to"]) for r in edges_rows]
    g = InteractionGraph(sorted({n for e in edges for n in e}), edges,
                         {(r["from"], r["to"]): int(r["msg_count"]) for r in edges_rows})
    raw: dict = {e: {} for e in edges}
    norm: dict = {e: {} for e in edges}
    flags: dict = {e: {} for e in edges}
    habits: dict = {}
    for r in norm_rows:
        e = (r["from"], r["to"])
        f = r["feature"]
        raw[e][f] = float(r["raw"])
        norm[e][f] = float(r["normalized"]) if r["normalized"] else None
        if r["flag"]:
            flags[e][f] = r["flag"]
        habits.setdefault(e[0], {})[f] = float(r["habit"])
    fused = {(r["from"], r["to"]): float(r["f_e"]) for r in edges_rows}
    g.vectors = {e: EdgeFeatureVector(e[0], e[1], raw[e], norm[e], fused[e], flags[e]) for e in edges}
    g.profiles = {p: HabitProfile(p, tuple(sorted(g.out_nbrs[p])), habits[p]) for p in sorted(habits)}
    tris = [DirectedTriangle(r["a"], r["b"], r["c"]) for r in io.read_csv(run.path("triangles.csv"))]
    return g, tris


# -- stages --------------------------------------------------------------------

def stage_ingest(run: Run) -> None:
    cfg = run.cfg
    corpus = resolve(cfg, run.base, "corpus")
    if corpus is None:
        raise ConfigError("config key 'corpus' is required for ingest")
    store = ingest_corpus(corpus, cfg["domain_filter"], int(cfg["workers"]), cfg["corpus_mode"])
    with open(run.path("messages.jsonl"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"_meta": run.meta("messages")}, sort_keys=True) + "\n")
        for m in store:
            fh.write(json.dumps({"id": m.id, "from": m.sender, "to": list(m.recipients), "ts": m.timestamp,
                                 "body": m.body}, sort_keys=True) + "\n")
    io.write_json(run.path("ingest_report.json"), store.report.to_dict(), run.meta("ingest_report"))
    pairs = aggregate_pairs(store)
    io.write_csv(run.path("pairs.csv"), ["from", "to", "msg_count", "first_ts", "last_ts"],
                 ([p.sender, p.recipient, p.count, p.first_ts, p.last_ts] for p in pairs), run.meta("pairs"))


def stage_features(run: Run) -> None:
    cfg = run.cfg
    store = load_store(run)
    pairs = select_mutual_pairs(aggregate_pairs(store), int(cfg["min_messages"]))
    lm_cfg = cfg["lm"]
    if lm_cfg.get("arpa"):
        arpa = Path(lm_cfg["arpa"])
        lm = load_arpa(arpa if arpa.is_absolute() else run.base / arpa)
        lm_info = {"type": "arpa", "order": lm.order, "vocabulary": len(lm.vocabulary)}
    else:
        lm = train_ngram_lm(corpus_sentences(store), int(lm_cfg["order"]), float(lm_cfg["k"]),
                            int(lm_cfg["min_count"]))
        lm_info = {"type": "add_k", "order": lm.order, "k": lm.k, "vocabulary": len(lm.vocabulary)}
    lex_path = resolve(cfg, run.base, "lexicon") or bundled_lexicon_path()
    lex = load_lexicon(lex_path)
    rows, dropped = extract_features(pairs, store, lm, lex)
    io.write_csv(run.path("features.csv"), ["from", "to", *FEATURES],
                 ([r.sender, r.recipient, *(float(getattr(r, f)) for f in FEATURES)] for r in rows),
                 run.meta("features"))
    io.write_json(run.path("features_report.json"),
                  {"lm": lm_info, "lexicon_size": len(lex), "pairs": len(rows),
                   "dropped": {f"{a}->{b}": why for (a, b), why in sorted(dropped.items())}},
                  run.meta("features_report"))


def stage_graph(run: Run) -> None:
    cfg = run.cfg
    store = load_store(run)
    rows = read_features_csv(_csv_lines(run.path("features.csv")))
    g = build_graph(aggregate_pairs(store), int(cfg["min_messages"]))
    g = attach_features(g, rows)
    fused = edge_prediction(g, cfg["weights"])
    tris = enumerate_directed_triangles(g)
    io.write_csv(run.path("graph.csv"), ["from", "to", "msg_count", "f_e"],
                 ([a, b, g.msg_count[(a, b)], float(v)] for (a, b), v in zip(g.edges, fused)),
                 run.meta("graph", {"nodes": len(g.nodes), "edges": len(g.edges)}))
    io.write_csv(run.path("triangles.csv"), ["a", "b", "c"], ([t.a, t.b, t.c] for t in tris),
                 run.meta("triangles", {"triangles": len(tris)}))
    norm_rows = []
    for e in g.edges:
        v = g.vectors[e]
        for f in FEATURES:
            norm_rows.append([e[0], e[1], f, float(v.raw[f]), float(g.profiles[e[0]].habit[f]),
                              None if v.normalized[f] is None else float(v.normalized[f]), v.flags.get(f, "")])
    io.write_csv(run.path("normalized.csv"), ["from", "to", "feature", "raw", "habit", "normalized", "flag"],
                 norm_rows, run.meta("normalized"))
    io.write_csv(run.path("balanced_set.csv"), ["z_ab", "z_ba", "z_ac", "z_bc", "balanced"],
                 ([r["z_ab"], r["z_ba"], r["z_ac"], r["z_bc"], r["balanced"]] for r in balanced_table_rows()),
                 run.meta("balanced_set"))


def _csv_lines(path: Path):
    with open(io.require(path), encoding="utf-8") as fh:
        return [ln for ln in fh if not ln.startswith("#")]


def preset_inputs(g: InteractionGraph, tris: list[DirectedTriangle], cfg: dict, preset: Preset):
    normalized = {f: [g.vectors[e].normalized.get(f) for e in g.edges] for f in FEATURES}
    weights = preset.weights if preset.weights is not None else cfg["weights"]
    f = fuse_scores(g.edges, normalized, weights)
    params = cost_params(cfg)
    if preset.structural:
        tri_idx = g.triangle_index(tris)
    else:
        params = CostParams(params.lam1, params.lam0, 0.0, 0.0)
        tri_idx = np.zeros((0, 4), dtype=np.int64)
    return f, tri_idx, params


def stage_solve(run: Run, preset: str | None = None) -> None:
    cfg = run.cfg
    g, tris = load_graph(run)
    names = [preset] if preset else list(PRESETS)
    for name in names:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
        p = PRESETS[name]
        f, tri_idx, params = preset_inputs(g, tris, cfg, p)
        result = solve_arrays(f, tri_idx, solver_config(cfg, params))
        breakdown = objective_breakdown(result.s, f, tri_idx, params)
        meta = run.meta(f"solution_{name}", {"preset": name, "model": p.model})
        io.write_csv(run.path(f"solution_{name}.csv"), ["from", "to", "f_e", "s_e"],
                     ([a, b, float(fe), float(se)] for (a, b), fe, se in zip(g.edges, f, result.s)), meta)
        io.write_json(run.path(f"solver_log_{name}.json"), {
            "preset": name,
            "model": p.model,
            "objective": breakdown.to_dict(),
            "converged": result.converged,
            "restarts": [{"seed": r.seed, "iters": r.iters, "objective": r.objective, "converged": r.converged}
                         for r in result.log],
            "triangles": int(tri_idx.shape[0]),
        }, run.meta(f"solver_log_{name}"))


def _stats_rows(rows):
    return ([r.feature, r.n, r.avg_all, r.avg_diff, r.t, r.ci95_lo, r.ci95_hi, r.pearson,
             r.mean_signed, r.t_signed, r.ci95_signed_lo, r.ci95_signed_hi] for r in rows)


STATS_HEADER = ["feature", "n_pairs", "avg_all", "avg_diff", "t", "ci95_lo", "ci95_hi", "pearson",
                "mean_signed_diff", "t_signed", "ci95_signed_lo", "ci95_signed_hi"]


def stage_stats(run: Run) -> None:
    cfg = run.cfg
    g, _ = load_graph(run)
    for name, kind in (("table1_raw.csv", "raw"), ("table3_habit.csv", "habit"),
                       ("table4_normalized.csv", "normalized")):
        io.write_csv(run.path(name), STATS_HEADER, _stats_rows(bidirectional_stats(g, kind)),
                     run.meta(name[:-4], {"value_kind": kind, "difference": "absolute (t, ci95); signed columns y-x"}))
    raw_rows = [RawFeatures(a, b, *(g.vectors[(a, b)].raw[f] for f in FEATURES)) for a, b in g.edges]
    dev = habit_deviation_stats(raw_rows, int(cfg["min_communicators"]))
    io.write_csv(run.path("table2_deviation.csv"),
                 ["feature", "global_dev", "individual_dev", "dev_of_individual_dev", "individuals", "edges"],
                 ([d.feature, d.global_dev, d.mean_individual_dev, d.dev_of_individual_dev, d.individuals, d.edges]
                  for d in dev), run.meta("table2_deviation"))


def stage_personality(run: Run) -> None:
    cfg = run.cfg
    g, _ = load_graph(run)
    res = personality_analysis(g, int(cfg["personality_k"]), int(cfg["min_communicators"]))
    note = ("correlation score = Pearson over an individual's partners between outgoing and returned raw "
            "feature values (interpretation)")
    io.write_csv(run.path("fig2_personality.csv"), ["feature", "group", "mean_correlation"],
                 ([f, grp, res.groups[f][grp]] for f in FEATURES for grp in PERSONALITY_GROUPS),
                 run.meta("fig2_personality", {"interpretation": note}))
    io.write_json(run.path("personality.json"),
                  {"members": res.members, "excluded": res.excluded, "qualifying": res.qualifying,
                   "interpretation": note}, run.meta("personality"))


def stage_eval(run: Run) -> None:
    cfg = run.cfg
    gt_path = resolve(cfg, run.base, "ground_truth")
    if gt_path is None:
        raise ConfigError("config key 'ground_truth' is required for eval")
    truth = read_ground_truth(io.require(gt_path))
    thresholds = [float(t) for t in cfg["thresholds"]]
    found = [n for n in PRESETS if run.path(f"solution_{n}.csv").exists()]
    if not found:
        raise MissingArtifact(run.path("solution_full.csv"))
    rows, report = [], {}
    for name in found:
        sol = io.read_csv(run.path(f"solution_{name}.csv"))
        strengths = {(r["from"], r["to"]): float(r["s_e"]) for r in sol}
        res = evaluate_precision(strengths, truth, thresholds)
        for th in thresholds:
            rows.append([PRESETS[name].model, th, res.precision[th]])
        report[name] = {"used": res.used, "skipped": [[p.lower, p.higher] for p in res.skipped]}
    io.write_csv(run.path("fig3_precision.csv"), ["model", "threshold", "precision"], rows,
                 run.meta("fig3_precision"))
    io.write_json(run.path("eval_report.json"), report, run.meta("eval_report"))


STAGES = {
    "ingest": stage_ingest,
    "features": stage_features,
    "graph": stage_graph,
    "solve": stage_solve,
    "stats": stage_stats,
    "personality": stage_personality,
    "eval": stage_eval,
}
ALL_ORDER = ("ingest", "features", "graph", "solve", "stats", "personality", "eval")


def run_stage(name: str, cfg: dict, base: Path, preset: str | None = None) -> Run:
    run = Run(cfg, base)
    names = ALL_ORDER if name == "all" else (name,)
    for n in names:
        log.info("stage %s", n)
        if n == "solve":
            stage_solve(run, preset)
        else:
            STAGES[n](run)
    return run
