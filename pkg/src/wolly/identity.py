"""Identity registry: nearest-neighbor matching over opaque face embeddings.

Embeddings are fixed-dimension real vectors supplied by the caller; no
vision code lives here. Every embedding entering the registry (stored or
probe) is canonicalized to 9-decimal fixed precision, which is also the
on-disk representation, so a profile is recognizable by its own embedding
at distance exactly zero and persistence round-trips byte-identically.

Storage is an append-only line-delimited record log (human-inspectable,
diff-friendly) with explicit compaction.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

DEFAULT_DIM = 128
DEFAULT_MATCH_THRESHOLD = 0.6
_EMBED_DECIMALS = 9


class IdentityError(Exception):
    pass


class DimensionMismatch(IdentityError):
    pass


class UnknownProfile(IdentityError):
    pass


class StorageError(IdentityError):
    pass


@dataclass(frozen=True)
class EmotionEvent:
    timestamp: float
    categories: tuple[str, ...]
    vad: tuple[float, float, float]


@dataclass
class UserProfile:
    id: str
    name: str
    age: int
    embedding: tuple[float, ...]
    picture_ref: Optional[str] = None
    interests: list[str] = field(default_factory=list)
    emotion_log: list[EmotionEvent] = field(default_factory=list)


@dataclass(frozen=True)
class Match:
    """A Known outcome; recognize returns None when nothing is close enough."""

    profile_id: str
    distance: float


def _format_embedding(values: Sequence[float]) -> str:
    return " ".join(f"{v:.{_EMBED_DECIMALS}f}" for v in values)


class IdentityRegistry:
    """Profiles with Euclidean nearest-neighbor recognition.

    ``path=None`` keeps everything in memory (used heavily in tests);
    otherwise records append to ``path`` and are replayed on open.
    Writes are serialized by an internal lock; reads take consistent
    snapshots under the same lock (queries are cheap).
    """

    def __init__(self, path=None, dim: int = DEFAULT_DIM,
                 match_threshold: float = DEFAULT_MATCH_THRESHOLD,
                 clock: Callable[[], float] = time.time,
                 fsync: bool = True):
        if dim <= 0:
            raise ValueError("dim must be positive")
        if match_threshold < 0:
            raise ValueError("match_threshold must be non-negative")
        self.dim = dim
        self.match_threshold = match_threshold
        self._clock = clock
        self._fsync = fsync
        self._lock = threading.RLock()
        self._profiles: dict[str, UserProfile] = {}
        self._order: list[str] = []
        self._matrix: Optional[np.ndarray] = None
        self._path = os.fspath(path) if path is not None else None
        self._file = None
        if self._path is not None:
            self._replay_log()
            try:
                self._file = open(self._path, "a", encoding="utf-8")
            except OSError as e:
                raise StorageError(f"cannot open registry log: {e}") from e

    # -- persistence ------------------------------------------------------

    def _replay_log(self) -> None:
        if not os.path.exists(self._path):
            return
        with open(self._path, "r", encoding="utf-8") as f:
            for n, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    raise StorageError(f"{self._path}:{n}: corrupt record: {e}") from e
                self._apply_record(record, n)

    def _apply_record(self, record: dict, n: int) -> None:
        op = record.get("op")
        if op == "enroll":
            embedding = tuple(float(v) for v in record["embedding"].split())
            if len(embedding) != self.dim:
                raise StorageError(f"{self._path}:{n}: embedding dimension {len(embedding)} != {self.dim}")
            profile = UserProfile(
                id=record["id"], name=record["name"], age=record["age"],
                embedding=embedding, picture_ref=record.get("picture_ref"),
            )
            self._profiles[profile.id] = profile
            self._order.append(profile.id)
            self._matrix = None
        elif op == "interaction":
            profile = self._profiles.get(record["id"])
            if profile is None:
                raise StorageError(f"{self._path}:{n}: interaction for unknown profile {record['id']!r}")
            for topic in record.get("interests", []):
                if topic not in profile.interests:
                    profile.interests.append(topic)
            if record.get("emotion") is not None:
                profile.emotion_log.append(_event_from_json(record["emotion"]))
            for entry in record.get("emotion_log", []):
                profile.emotion_log.append(_event_from_json(entry))
        else:
            raise StorageError(f"{self._path}:{n}: unknown record op {op!r}")

    def _append(self, record: dict) -> None:
        if self._file is None:
            return
        try:
            self._file.write(json.dumps(record, separators=(",", ":")) + "\n")
            self._file.flush()
            if self._fsync:
                os.fsync(self._file.fileno())
        except OSError as e:
            raise StorageError(f"cannot append to registry log: {e}") from e

    def close(self) -> None:
        with self._lock:
            if self._file is not None:
                self._file.close()
                self._file = None

    def __enter__(self) -> "IdentityRegistry":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def compact(self) -> None:
        """Rewrite the log as one enroll + at most one merged interaction
        record per profile, atomically."""
        if self._path is None:
            return
        with self._lock:
            tmp = self._path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as f:
                for pid in self._order:
                    p = self._profiles[pid]
                    f.write(json.dumps(_enroll_record(p), separators=(",", ":")) + "\n")
                    if p.interests or p.emotion_log:
                        merged = {
                            "op": "interaction", "id": pid,
                            "interests": list(p.interests),
                            "emotion_log": [_event_to_json(e) for e in p.emotion_log],
                        }
                        f.write(json.dumps(merged, separators=(",", ":")) + "\n")
                f.flush()
                os.fsync(f.fileno())
            if self._file is not None:
                self._file.close()
            os.replace(tmp, self._path)
            self._file = open(self._path, "a", encoding="utf-8")

    # -- core operations ---------------------------------------------------

    def canonicalize(self, embedding: Sequence[float]) -> tuple[float, ...]:
        """Fixed-precision form used for matching and storage."""
        if len(embedding) != self.dim:
            raise DimensionMismatch(f"embedding dimension {len(embedding)} != {self.dim}")
        return tuple(float(f"{float(v):.{_EMBED_DECIMALS}f}") for v in embedding)

    def enroll(self, name: str, age: int, embedding: Sequence[float],
               picture_ref: Optional[str] = None) -> str:
        if not name:
            raise ValueError("name must be non-empty")
        if age < 0:
            raise ValueError("age must be non-negative")
        canonical = self.canonicalize(embedding)
        with self._lock:
            profile = UserProfile(
                id=secrets.token_hex(8), name=name, age=int(age),
                embedding=canonical, picture_ref=picture_ref,
            )
            self._profiles[profile.id] = profile
            self._order.append(profile.id)
            self._matrix = None
            self._append(_enroll_record(profile))
            return profile.id

    def recognize(self, embedding: Sequence[float]) -> Optional[Match]:
        """Nearest profile if within the match threshold (inclusive).

        Ties go to the earliest enrollment.
        """
        probe = np.asarray(self.canonicalize(embedding), dtype=np.float64)
        with self._lock:
            if not self._order:
                return None
            if self._matrix is None:
                self._matrix = np.asarray(
                    [self._profiles[pid].embedding for pid in self._order], dtype=np.float64)
            distances = np.sqrt(((self._matrix - probe) ** 2).sum(axis=1))
            best = int(np.argmin(distances))  # first minimum = earliest enrollment
            distance = float(distances[best])
            if distance <= self.match_threshold:
                return Match(self._order[best], distance)
            return None

    def record_interaction(self, profile_id: str, interests_delta: Sequence[str],
                           emotion: Optional[tuple[Sequence[str], Sequence[float]]] = None) -> None:
        with self._lock:
            profile = self._profiles.get(profile_id)
            if profile is None:
                raise UnknownProfile(profile_id)
            added = []
            for topic in interests_delta:
                if topic not in profile.interests:
                    profile.interests.append(topic)
                    added.append(topic)
            event_json = None
            if emotion is not None:
                categories, vad = emotion
                if len(vad) != 3:
                    raise DimensionMismatch("vad must have 3 components")
                event = EmotionEvent(self._clock(), tuple(categories),
                                     tuple(float(v) for v in vad))
                profile.emotion_log.append(event)
                event_json = _event_to_json(event)
            self._append({"op": "interaction", "id": profile_id,
                          "interests": added, "emotion": event_json})

    def get(self, profile_id: str) -> UserProfile:
        with self._lock:
            profile = self._profiles.get(profile_id)
            if profile is None:
                raise UnknownProfile(profile_id)
            return profile

    def profiles(self) -> list[UserProfile]:
        with self._lock:
            return [self._profiles[pid] for pid in self._order]

    def snapshot_bytes(self) -> bytes:
        """Canonical serialization of the full registry state."""
        with self._lock:
            doc = [
                {
                    "id": p.id, "name": p.name, "age": p.age,
                    "embedding": _format_embedding(p.embedding),
                    "picture_ref": p.picture_ref,
                    "interests": list(p.interests),
                    "emotion_log": [_event_to_json(e) for e in p.emotion_log],
                }
                for p in self.profiles()
            ]
            return json.dumps(doc, separators=(",", ":"), sort_keys=True).encode("utf-8")


def _enroll_record(p: UserProfile) -> dict:
    return {"op": "enroll", "id": p.id, "name": p.name, "age": p.age,
            "embedding": _format_embedding(p.embedding), "picture_ref": p.picture_ref}


def _event_to_json(e: EmotionEvent) -> dict:
    return {"ts": e.timestamp, "categories": list(e.categories), "vad": list(e.vad)}


def _event_from_json(doc: dict) -> EmotionEvent:
    return EmotionEvent(float(doc["ts"]), tuple(doc["categories"]),
                        tuple(float(v) for v in doc["vad"]))
