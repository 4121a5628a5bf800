"""Persistence for the two service databases: the content table and the
per-user trace log, plus heading estimation from consecutive fixes.

Both tables are stored as line-delimited JSON (one record per line,
UTF-8), which keeps files human-readable, diffable, and append-friendly.
See docs/file-formats.md for annotated examples.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .geo import GeoPoint, GridIndex, haversine_distance, initial_bearing
from . import vocab

CONTENTS_FILENAME = "contents.jsonl"
TRACES_FILENAME = "traces.jsonl"

#: Displacement below which the walker is treated as stationary and the
#: previous heading is retained (consumer-GPS jitter scale).
STATIONARY_THRESHOLD_M = 3.0


class ValidationError(ValueError):
    """A record violates a field constraint."""


class DuplicateId(ValueError):
    """A content id was inserted twice."""


class OutOfOrderFix(ValueError):
    """A fix arrived with a timestamp earlier than the user's last fix."""


class CorruptFile(ValueError):
    """A persisted table failed to parse.

    Attributes:
        path: the offending file
        line: 1-based number of the first malformed line
    """

    def __init__(self, path: str, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class TimeWindow:
    """Daily-recurring active interval, minutes from local midnight,
    start inclusive, end exclusive."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end <= 1440):
            raise ValidationError(f"time window [{self.start}, {self.end}) invalid")

    def contains(self, minute: int) -> bool:
        return self.start <= minute < self.end


@dataclass(frozen=True)
class ContentRecord:
    """One barrier or useful-information spot."""

    id: str
    kind: str
    category: str
    barrier_class: str
    title: str
    comment: str
    tags: tuple[str, ...]
    photo_ref: str
    time_window: Optional[TimeWindow]
    location: GeoPoint
    submitter: str
    created_at: float

    def validate(self) -> None:
        if not self.id:
            raise ValidationError("content id must be non-empty")
        if self.kind not in vocab.KINDS:
            raise ValidationError(f"unknown kind {self.kind!r}")
        if self.category not in vocab.CATEGORIES:
            raise ValidationError(f"unknown category {self.category!r}")
        classes = vocab.BARRIER_CLASSES if self.kind == vocab.KIND_BARRIER else vocab.USEFUL_CLASSES
        if self.barrier_class not in classes:
            raise ValidationError(f"unknown {self.kind} class {self.barrier_class!r}")

    def active_at(self, minute: int) -> bool:
        return self.time_window is None or self.time_window.contains(minute)

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "category": self.category,
            "barrier_class": self.barrier_class,
            "title": self.title,
            "comment": self.comment,
            "tags": list(self.tags),
            "photo_ref": self.photo_ref,
            "time_window": None
            if self.time_window is None
            else {"start": self.time_window.start, "end": self.time_window.end},
            "location": {"lat": self.location.lat, "lon": self.location.lon},
            "submitter": self.submitter,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ContentRecord":
        try:
            window = data["time_window"]
            record = cls(
                id=data["id"],
                kind=data["kind"],
                category=data["category"],
                barrier_class=data["barrier_class"],
                title=data["title"],
                comment=data["comment"],
                tags=tuple(data["tags"]),
                photo_ref=data["photo_ref"],
                time_window=None if window is None else TimeWindow(window["start"], window["end"]),
                location=GeoPoint(data["location"]["lat"], data["location"]["lon"]),
                submitter=data["submitter"],
                created_at=data["created_at"],
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad content record: {exc}") from exc
        record.validate()
        return record


@dataclass(frozen=True)
class Fix:
    """One timestamped position report from a walker."""

    user_id: str
    point: GeoPoint
    at: float

    def to_json_dict(self) -> dict:
        return {"user_id": self.user_id, "point": {"lat": self.point.lat, "lon": self.point.lon}, "at": self.at}

    @classmethod
    def from_json_dict(cls, data: dict) -> "Fix":
        try:
            return cls(
                user_id=data["user_id"],
                point=GeoPoint(data["point"]["lat"], data["point"]["lon"]),
                at=data["at"],
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad fix record: {exc}") from exc


@dataclass(frozen=True)
class HeadingEstimate:
    """Current motion estimate for a walker.

    ``heading`` is None until some pair of fixes has been at least the
    stationary threshold apart; afterwards it is retained across
    stationary polls.  ``from_fix``/``to_fix`` are the pair that
    established the heading.
    """

    heading: Optional[float]
    speed: float
    from_fix: Optional[Fix] = None
    to_fix: Optional[Fix] = None


@dataclass
class _UserTrace:
    fixes: list[Fix] = field(default_factory=list)
    heading: Optional[HeadingEstimate] = None


class ContentStore:
    """In-memory content table + trace log with optional directory binding.

    When bound to a directory, every mutation is appended to the matching
    line-delimited file so the store survives restarts.  Mutations are
    serialized by an internal lock (single-writer contract); reads are
    safe to run concurrently.
    """

    def __init__(self, stationary_threshold_m: float = STATIONARY_THRESHOLD_M, cell_size: float = 0.001):
        self.stationary_threshold_m = stationary_threshold_m
        self._contents: dict[str, ContentRecord] = {}
        self._index = GridIndex(cell_size)
        self._fixes: list[Fix] = []
        self._traces: dict[str, _UserTrace] = {}
        self._dir: Optional[Path] = None
        self._lock = threading.RLock()

    # -- content table -------------------------------------------------

    def put_content(self, record: ContentRecord) -> str:
        record.validate()
        with self._lock:
            if record.id in self._contents:
                raise DuplicateId(f"content id {record.id!r} already stored")
            self._contents[record.id] = record
            self._index.insert(record.id, record.location)
            self._append_line(CONTENTS_FILENAME, record.to_json_dict())
        return record.id

    def get_content(self, content_id: str) -> ContentRecord:
        return self._contents[content_id]

    def all_contents(self) -> list[ContentRecord]:
        return list(self._contents.values())

    def active_contents(self, minute: int) -> list[ContentRecord]:
        """Records whose daily window is absent or contains ``minute``."""
        return [r for r in self._contents.values() if r.active_at(minute)]

    def contents_near(self, center: GeoPoint, radius: float) -> list[tuple[ContentRecord, float]]:
        """(record, distance) pairs within ``radius`` meters, nearest first."""
        ids = self._index.query_radius(center, radius)
        pairs = [(self._contents[i], haversine_distance(self._contents[i].location, center)) for i in ids]
        pairs.sort(key=lambda pair: (pair[1], pair[0].id))
        return pairs

    def __len__(self) -> int:
        return len(self._contents)

    # -- trace log -----------------------------------------------------

    def append_fix(self, fix: Fix) -> HeadingEstimate:
        """Append a fix and return the walker's updated motion estimate.

        The heading is the forward azimuth from the previous fix when the
        displacement reaches the stationary threshold; otherwise the
        previously established heading is retained.
        """
        with self._lock:
            trace = self._traces.setdefault(fix.user_id, _UserTrace())
            if trace.fixes and fix.at < trace.fixes[-1].at:
                raise OutOfOrderFix(
                    f"fix at {fix.at} precedes last fix at {trace.fixes[-1].at} for user {fix.user_id!r}"
                )
            prev = trace.fixes[-1] if trace.fixes else None
            if prev is None:
                estimate = HeadingEstimate(heading=None, speed=0.0)
            else:
                displacement = haversine_distance(prev.point, fix.point)
                dt = fix.at - prev.at
                speed = displacement / dt if dt > 0 else 0.0
                if displacement >= self.stationary_threshold_m:
                    estimate = HeadingEstimate(
                        heading=initial_bearing(prev.point, fix.point),
                        speed=speed,
                        from_fix=prev,
                        to_fix=fix,
                    )
                elif trace.heading is not None:
                    held = trace.heading
                    estimate = HeadingEstimate(held.heading, speed, held.from_fix, held.to_fix)
                else:
                    estimate = HeadingEstimate(heading=None, speed=speed)
            if estimate.heading is not None:
                trace.heading = estimate
            trace.fixes.append(fix)
            self._fixes.append(fix)
            self._append_line(TRACES_FILENAME, fix.to_json_dict())
        return estimate

    def fixes_of(self, user_id: str) -> list[Fix]:
        trace = self._traces.get(user_id)
        return list(trace.fixes) if trace else []

    def heading_of(self, user_id: str) -> Optional[HeadingEstimate]:
        trace = self._traces.get(user_id)
        return trace.heading if trace else None

    # -- persistence ---------------------------------------------------

    def _append_line(self, filename: str, payload: dict) -> None:
        if self._dir is None:
            return
        with open(self._dir / filename, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, ensure_ascii=False) + "\n")

    def bind_dir(self, directory: str | Path) -> None:
        """Append all future mutations to files under ``directory``."""
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        self._dir = path

    def save(self, directory: str | Path) -> None:
        """Write the full store state to ``directory`` (two files)."""
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        with self._lock:
            _write_jsonl(path / CONTENTS_FILENAME, (r.to_json_dict() for r in self._contents.values()))
            _write_jsonl(path / TRACES_FILENAME, (f.to_json_dict() for f in self._fixes))

    @classmethod
    def load(cls, directory: str | Path, stationary_threshold_m: float = STATIONARY_THRESHOLD_M) -> "ContentStore":
        """Rebuild a store from ``directory``; missing files mean empty tables.

        Raises:
            CorruptFile: naming the first malformed line.
        """
        path = Path(directory)
        store = cls(stationary_threshold_m=stationary_threshold_m)
        for lineno, data in _read_jsonl(path / CONTENTS_FILENAME):
            try:
                store.put_content(ContentRecord.from_json_dict(data))
            except ValueError as exc:
                raise CorruptFile(str(path / CONTENTS_FILENAME), lineno, str(exc)) from exc
        for lineno, data in _read_jsonl(path / TRACES_FILENAME):
            try:
                store.append_fix(Fix.from_json_dict(data))
            except ValueError as exc:
                raise CorruptFile(str(path / TRACES_FILENAME), lineno, str(exc)) from exc
        return store


def _write_jsonl(path: Path, payloads: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for payload in payloads:
            fh.write(json.dumps(payload, ensure_ascii=False) + "\n")


def _read_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    if not path.exists():
        return
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                data = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise CorruptFile(str(path), lineno, f"malformed JSON ({exc.msg})") from exc
            if not isinstance(data, dict):
                raise CorruptFile(str(path), lineno, "record is not an object")
            yield lineno, data
