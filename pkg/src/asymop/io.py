"""Artifact files. Every CSV starts with ``#`` metadata lines and every JSON
carries a ``_meta`` object, both derived from the run config only (no clock),
so identical inputs produce byte-identical outputs."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .errors import MissingArtifact


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def metadata(config: dict, artifact: str, extra: dict | None = None) -> dict:
    meta = {
        "artifact": artifact,
        "artifact_version": __version__,
        "config_hash": config_hash(config),
        "seed": config.get("seed"),
        "config": config,
    }
    if extra:
        meta.update(extra)
    return meta


def fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return "" if v is None else str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence], meta: dict) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# artifact={meta['artifact']} version={meta['artifact_version']} "
                 f"config_hash={meta['config_hash']} seed={meta['seed']}\n")
        for key in sorted(k for k in meta if k not in {"artifact", "artifact_version", "config_hash", "seed"}):
            fh.write(f"# {key}={canonical_json(meta[key])}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_json(path: Path, payload: dict, meta: dict) -> Path:
    body = {"_meta": meta}
    body.update(payload)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def require(path: Path) -> Path:
    if not path.exists():
        raise MissingArtifact(path)
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(require(path), encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(ln for ln in fh if not ln.startswith("#")))


def read_json(path: Path) -> dict:
    with open(require(path), encoding="utf-8") as fh:
        return json.load(fh)
