"""Email ingestion: raw maildir trees or JSONL message files into a canonical,
deduplicated message store, plus per-direction aggregation."""
from __future__ import annotations

import email
import email.policy
import email.utils
import hashlib
import json
import logging
import os
import re
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import timezone
from pathlib import Path
from typing import Iterable, Iterator

from .errors import BadDate, EmptyCorpus, IoFailure, MissingHeader

log = logging.getLogger(__name__)

_ORIGINAL_RE = re.compile(r"^\s*-+\s*Original Message\s*-+\s*$", re.IGNORECASE)
_FORWARDED_RE = re.compile(r"^\s*-+\s*Forwarded by\b", re.IGNORECASE)


@dataclass(frozen=True)
class Message:
    id: str
    sender: str
    recipients: tuple[str, ...]
    timestamp: int
    body: str

    def body_hash(self) -> str:
        return hashlib.sha1(self.body.encode("utf-8")).hexdigest()


@dataclass
class DirectedPairStats:
    sender: str
    recipient: str
    messages: list[str]
    first_ts: int
    last_ts: int

    @property
    def count(self) -> int:
        return len(self.messages)


@dataclass
class IngestReport:
    files_read: int = 0
    kept: int = 0
    rejected: Counter = field(default_factory=Counter)

    def reject(self, reason: str) -> None:
        self.rejected[reason] += 1

    def to_dict(self) -> dict:
        return {
            "files_read": self.files_read,
            "kept": self.kept,
            "rejected": dict(sorted(self.rejected.items())),
        }


@dataclass
class MessageStore:
    """Immutable-by-convention container; messages sorted by (timestamp, id)."""
    messages: list[Message]
    report: IngestReport

    def __post_init__(self):
        self._by_id = {m.id: m for m in self.messages}

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self) -> Iterator[Message]:
        return iter(self.messages)

    def get(self, message_id: str) -> Message:
        return self._by_id[message_id]

    def pair_events(self) -> int:
        return sum(len(m.recipients) for m in self.messages)


def normalize_address(raw: str) -> str:
    """Lowercase and strip display name / angle brackets."""
    _, addr = email.utils.parseaddr(raw)
    addr = (addr or raw).strip().strip("<>").strip().lower()
    return addr


def _address_list(value: str | None) -> list[str]:
    if not value:
        return []
    out = []
    for _, addr in email.utils.getaddresses([value]):
        addr = addr.strip().strip("<>").strip().lower()
        if addr and addr not in out:
            out.append(addr)
    return out


def strip_quoted(body: str) -> str:
    """Drop ``>``-quoted lines and everything from a reply/forward separator on."""
    kept = []
    for line in body.splitlines():
        if _ORIGINAL_RE.match(line) or _FORWARDED_RE.match(line):
            break
        if line.lstrip().startswith(">"):
            continue
        kept.append(line)
    return "\n".join(kept).strip()


def parse_date(value: str | None) -> int:
    if not value or not value.strip():
        raise BadDate("missing Date header")
    try:
        dt = email.utils.parsedate_to_datetime(value.strip())
    except (TypeError, ValueError, IndexError) as exc:
        raise BadDate(f"unparseable date {value!r}") from exc
    if dt is None:
        raise BadDate(f"unparseable date {value!r}")
    if dt.tzinfo is None:
        # RFC 2822 "-0000" or no zone: read as UTC
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def parse_email_file(raw: bytes, message_id: str = "") -> Message:
    """Parse one RFC-822 style message.

    Recipients are To plus Cc (Bcc ignored). A missing or unparseable Date
    raises :class:`BadDate`; missing From/To raises :class:`MissingHeader`.
    Self-addressed recipients are dropped here; domain filtering happens in
    :func:`ingest_corpus`.
    """
    msg = email.message_from_bytes(raw, policy=email.policy.compat32)
    sender_hdr = msg.get("From")
    if not sender_hdr or not sender_hdr.strip():
        raise MissingHeader("From")
    to_hdr = msg.get("To")
    if not to_hdr or not to_hdr.strip():
        raise MissingHeader("To")
    ts = parse_date(msg.get("Date"))

    sender = normalize_address(sender_hdr)
    if not sender:
        raise MissingHeader("From")
    recipients = [r for r in _address_list(to_hdr) + _address_list(msg.get("Cc")) if r != sender]
    recipients = list(dict.fromkeys(recipients))

    payload = msg.get_payload(decode=False)
    if isinstance(payload, list):  # multipart: keep the first text part only
        payload = next((p.get_payload() for p in payload if isinstance(p.get_payload(), str)), "")
    body = strip_quoted(payload or "")
    return Message(id=message_id, sender=sender, recipients=tuple(recipients), timestamp=ts, body=body)


def _parse_path(args: tuple[str, str]) -> tuple[str, Message | None, str | None]:
    path, rel = args
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError:
        return rel, None, "io_error"
    try:
        return rel, parse_email_file(raw, rel), None
    except MissingHeader as exc:
        return rel, None, f"missing_{exc.name.lower()}"
    except BadDate:
        return rel, None, "bad_date"
    except Exception:  # malformed bytes the stdlib parser chokes on
        return rel, None, "decode_error"


def _iter_raw(root: Path, workers: int) -> Iterator[tuple[str, Message | None, str | None]]:
    paths = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            if name.startswith("."):
                continue
            full = os.path.join(dirpath, name)
            paths.append((full, os.path.relpath(full, root)))
    if workers > 1 and len(paths) > 1000:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(_parse_path, paths, chunksize=512)
    else:
        yield from map(_parse_path, paths)


def _iter_jsonl(path: Path) -> Iterator[tuple[str, Message | None, str | None]]:
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(path, str(exc)) from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rid = f"{path.name}:{lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                yield rid, None, "decode_error"
                continue
            if not isinstance(rec, dict):
                yield rid, None, "decode_error"
                continue
            if "_meta" in rec:  # header line of the pipeline's own dump
                continue
            rid = str(rec.get("id", rid))
            sender = normalize_address(str(rec.get("from") or ""))
            if not sender:
                yield rid, None, "missing_from"
                continue
            to = rec.get("to") or []
            if isinstance(to, str):
                to = [to]
            recips = [normalize_address(str(r)) for r in to]
            recips = list(dict.fromkeys(r for r in recips if r and r != sender))
            if not to:
                yield rid, None, "missing_to"
                continue
            ts = rec.get("ts")
            if isinstance(ts, bool) or not isinstance(ts, (int, float)):
                yield rid, None, "bad_date"
                continue
            yield rid, Message(rid, sender, tuple(recips), int(ts), strip_quoted(str(rec.get("body") or ""))), None


def _discover_jsonl(root: Path) -> list[Path]:
    if root.is_file():
        return [root]
    return sorted(p for p in root.iterdir() if p.is_file() and p.suffix == ".jsonl")


def ingest_corpus(root: str | os.PathLike, domain_filter: str = "@enron.com", workers: int = 1,
                  mode: str = "auto") -> MessageStore:
    """Read every message under ``root`` and keep the internal ones.

    ``root`` may be a raw maildir tree, a directory holding ``*.jsonl`` files,
    or a single JSONL file. A message survives when its sender and at least one
    recipient end with ``domain_filter``; non-matching recipients are removed.
    Duplicates on (sender, recipients, timestamp, body hash) collapse to the
    one with the smallest id. ``mode`` is ``auto`` (JSONL if any is found),
    ``jsonl`` or ``raw``.
    """
    if mode not in ("auto", "jsonl", "raw"):
        raise ValueError(f"unknown corpus mode {mode!r}")
    root = Path(root)
    if not root.exists():
        raise IoFailure(root, "no such file or directory")
    dom = domain_filter.lower()
    report = IngestReport()

    jsonl = _discover_jsonl(root) if mode != "raw" else []
    if mode == "jsonl" and not jsonl:
        raise EmptyCorpus(f"no JSONL file at {root}")
    if jsonl:
        records: Iterable = (r for p in jsonl for r in _iter_jsonl(p))
    else:
        records = _iter_raw(root, workers)

    candidates: list[Message] = []
    for _, msg, reason in records:
        report.files_read += 1
        if msg is None:
            report.reject(reason or "unknown")
            continue
        if not msg.sender.endswith(dom):
            report.reject("external_sender")
            continue
        internal = tuple(r for r in msg.recipients if r.endswith(dom))
        if not internal:
            report.reject("no_internal_recipient")
            continue
        candidates.append(Message(msg.id, msg.sender, internal, msg.timestamp, msg.body))

    candidates.sort(key=lambda m: (m.timestamp, m.id))
    seen: set = set()
    kept: list[Message] = []
    for m in candidates:
        key = (m.sender, tuple(sorted(m.recipients)), m.timestamp, m.body_hash())
        if key in seen:
            report.reject("duplicate")
            continue
        seen.add(key)
        kept.append(m)
    report.kept = len(kept)
    for reason, n in sorted(report.rejected.items()):
        log.warning("rejected %d message(s): %s", n, reason)
    if not kept:
        raise EmptyCorpus(f"no messages under {root} survive filter {domain_filter!r}")
    log.info("ingested %d of %d messages", report.kept, report.files_read)
    return MessageStore(kept, report)


def aggregate_pairs(store: MessageStore) -> list[DirectedPairStats]:
    """Group pair events by ordered (sender, recipient), sorted by key."""
    if not len(store):
        raise EmptyCorpus("empty message store")
    groups: dict[tuple[str, str], list[Message]] = defaultdict(list)
    for m in store:
        for r in m.recipients:
            groups[(m.sender, r)].append(m)
    out = []
    for (a, b), msgs in sorted(groups.items()):
        msgs.sort(key=lambda m: (m.timestamp, m.id))
        out.append(DirectedPairStats(a, b, [m.id for m in msgs], msgs[0].timestamp, msgs[-1].timestamp))
    return out


def write_jsonl(store: MessageStore, path: str | os.PathLike) -> None:
    """Dump the store in the JSONL interchange format (re-ingestable)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for m in store:
            fh.write(json.dumps({"id": m.id, "from": m.sender, "to": list(m.recipients),
                                 "ts": m.timestamp, "body": m.body}, sort_keys=True) + "\n")
