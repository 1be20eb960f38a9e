"""Emotion categories, thresholding, and the canonical response format.

A per-person prediction is 26 category confidences in [0, 1] plus a
valence/arousal/dominance triple on the wire scale [0, 10] (divide by 10
for the normalized form). The response body is canonical JSON: top-level
``data``, person keys as stringified indices ascending, per person an
``emotions`` object (alphabetical category keys, percentage strings with
exactly two decimals) followed by a ``vad`` array of three numbers at
full float precision.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

CATEGORIES: tuple[str, ...] = (
    "Affection",
    "Anger",
    "Annoyance",
    "Anticipation",
    "Aversion",
    "Confidence",
    "Disapproval",
    "Disconnection",
    "Disquietment",
    "Doubt/Confusion",
    "Embarrassment",
    "Engagement",
    "Esteem",
    "Excitement",
    "Fatigue",
    "Fear",
    "Happiness",
    "Pain",
    "Peace",
    "Pleasure",
    "Sadness",
    "Sensitivity",
    "Suffering",
    "Surprise",
    "Sympathy",
    "Yearning",
)

assert len(CATEGORIES) == 26
assert list(CATEGORIES) == sorted(CATEGORIES)

_CATEGORY_INDEX = {name: i for i, name in enumerate(CATEGORIES)}

VAD_WIRE_SCALE = 10.0

PERCENT_RE = re.compile(r"^\d+\.\d{2}$")


class DimensionMismatch(ValueError):
    pass


def _check_len(name: str, values: Sequence, expected: int) -> None:
    if len(values) != expected:
        raise DimensionMismatch(f"{name} must have length {expected}, got {len(values)}")


@dataclass(frozen=True)
class Thresholds:
    """Per-category selection thresholds, CATEGORIES order."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        _check_len("thresholds", self.values, len(CATEGORIES))
        for v in self.values:
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValueError(f"threshold {v!r} outside [0, 1]")

    @classmethod
    def uniform(cls, value: float) -> "Thresholds":
        return cls((value,) * len(CATEGORIES))

    @classmethod
    def from_text(cls, text: str) -> "Thresholds":
        """Parse the threshold file format: 26 lines ``CategoryName value``.

        Lines must appear in CATEGORIES order; blank lines and ``#``
        comments are skipped.
        """
        entries = []
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.rsplit(None, 1)
            if len(parts) != 2:
                raise ValueError(f"line {n}: expected 'CategoryName value'")
            entries.append((n, parts[0], parts[1]))
        if len(entries) != len(CATEGORIES):
            raise ValueError(f"expected {len(CATEGORIES)} threshold lines, got {len(entries)}")
        values = []
        for (n, name, raw_value), expected in zip(entries, CATEGORIES):
            if name != expected:
                raise ValueError(f"line {n}: expected category {expected!r}, got {name!r}")
            values.append(float(raw_value))
        return cls(tuple(values))

    @classmethod
    def from_file(cls, path) -> "Thresholds":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_text(f.read())

    def to_text(self) -> str:
        return "".join(f"{name} {value}\n" for name, value in zip(CATEGORIES, self.values))


@dataclass(frozen=True)
class RawPrediction:
    """One person's raw model output: 26 category scores + wire-scale VAD."""

    cat_scores: tuple[float, ...]
    vad: tuple[float, float, float]

    def __post_init__(self) -> None:
        _check_len("cat_scores", self.cat_scores, len(CATEGORIES))
        _check_len("vad", self.vad, 3)
        for s in self.cat_scores:
            if not (math.isfinite(s) and 0.0 <= s <= 1.0):
                raise ValueError(f"category score {s!r} outside [0, 1]")
        for v in self.vad:
            if not math.isfinite(v):
                raise ValueError("vad values must be finite")

    def normalized_vad(self) -> tuple[float, float, float]:
        v, a, d = self.vad
        return (v / VAD_WIRE_SCALE, a / VAD_WIRE_SCALE, d / VAD_WIRE_SCALE)


def format_percent(score: float) -> str:
    """Format a [0,1] score as a percentage with exactly two decimals.

    Half-up rounding over the score's shortest decimal representation,
    e.g. 0.15 -> "15.00", 0.531 -> "53.10".
    """
    cents = (Decimal(repr(score)) * 100).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return str(cents)


def select_categories(scores: Sequence[float], thresholds: Thresholds) -> dict[str, str]:
    """Categories whose score meets its threshold (inclusive), in order.

    Returns an insertion-ordered map category -> two-decimal percentage
    string, in CATEGORIES (alphabetical) order.
    """
    _check_len("scores", scores, len(CATEGORIES))
    out: dict[str, str] = {}
    for name, score, threshold in zip(CATEGORIES, scores, thresholds.values):
        if score >= threshold:
            out[name] = format_percent(score)
    return out


@dataclass(frozen=True)
class PersonReading:
    """Selected categories (percentage strings) plus the VAD triple."""

    emotions: dict[str, str]
    vad: tuple[float, float, float]

    def __post_init__(self) -> None:
        for name, value in self.emotions.items():
            if name not in _CATEGORY_INDEX:
                raise ValueError(f"unknown category {name!r}")
            if not PERCENT_RE.match(value):
                raise ValueError(f"percentage {value!r} not in NN.NN form")
        ordered = dict(sorted(self.emotions.items(), key=lambda kv: _CATEGORY_INDEX[kv[0]]))
        object.__setattr__(self, "emotions", ordered)
        _check_len("vad", self.vad, 3)
        object.__setattr__(self, "vad", tuple(float(v) for v in self.vad))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PersonReading):
            return NotImplemented
        return list(self.emotions.items()) == list(other.emotions.items()) and self.vad == other.vad


@dataclass(frozen=True)
class EmotionReport:
    """Per-person readings, indexed by detection order."""

    persons: tuple[PersonReading, ...]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmotionReport):
            return NotImplemented
        return self.persons == other.persons


def render_response(report: EmotionReport) -> bytes:
    """Serialize a report to its canonical UTF-8 JSON bytes."""
    data = {}
    for index, person in enumerate(report.persons):
        data[str(index)] = {"emotions": dict(person.emotions), "vad": list(person.vad)}
    return json.dumps({"data": data}, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def parse_response(payload: bytes | str) -> EmotionReport:
    """Parse response bytes back into a report, validating the schema."""
    doc = json.loads(payload)
    if not isinstance(doc, dict) or set(doc) != {"data"} or not isinstance(doc["data"], dict):
        raise ValueError("response must be an object with a single 'data' key")
    data = doc["data"]
    expected_keys = [str(i) for i in range(len(data))]
    if sorted(data, key=lambda k: int(k) if k.isdigit() else -1) != expected_keys:
        raise ValueError("person keys must be contiguous stringified indices")
    persons = []
    for key in expected_keys:
        entry = data[key]
        if not isinstance(entry, dict) or set(entry) != {"emotions", "vad"}:
            raise ValueError(f"person {key}: expected exactly 'emotions' and 'vad'")
        emotions = entry["emotions"]
        vad = entry["vad"]
        if not isinstance(emotions, dict):
            raise ValueError(f"person {key}: emotions must be an object")
        if not isinstance(vad, list) or len(vad) != 3:
            raise ValueError(f"person {key}: vad must be a 3-element array")
        persons.append(PersonReading({str(k): str(v) for k, v in emotions.items()},
                                     tuple(float(v) for v in vad)))
    return EmotionReport(tuple(persons))
