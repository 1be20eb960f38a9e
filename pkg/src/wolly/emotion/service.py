"""Emotion-analysis service: detection + per-person prediction + wire format.

The predictor and the person detector are pluggable interfaces. The
defaults are deterministic stubs: the detector finds solid marker-color
regions in the frame and the predictor maps each marker color to a fixed
raw prediction, so every downstream contract (thresholding, response
bytes, client polling) is testable without the CNN.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from PIL import Image, ImageDraw, UnidentifiedImageError
from starlette.concurrency import run_in_threadpool

from .wire import (
    CATEGORIES,
    EmotionReport,
    PersonReading,
    RawPrediction,
    Thresholds,
    render_response,
    select_categories,
)

CONTEXT_SIZE = (224, 224)  # whole-scene view fed to the predictor
BODY_SIZE = (128, 128)  # per-person crop fed to the predictor


class BadImage(ValueError):
    pass


class PredictorFailure(RuntimeError):
    pass


Box = tuple[int, int, int, int]  # left, top, width, height


class PersonDetector(Protocol):
    def detect(self, image: Image.Image) -> list[Box]:
        """Bounding boxes of detected persons, in stable detection order."""


class PersonPredictor(Protocol):
    def predict(self, context: np.ndarray, body: np.ndarray) -> RawPrediction:
        """Raw prediction from a 224x224x3 context view and 128x128x3 body crop."""


@dataclass(frozen=True)
class EmotionAnalyzer:
    detector: PersonDetector
    predictor: PersonPredictor
    thresholds: Thresholds

    def analyze(self, frame: bytes) -> EmotionReport:
        """One report entry per detected person, in detection order."""
        try:
            image = Image.open(io.BytesIO(frame))
            image.load()
        except (UnidentifiedImageError, OSError, ValueError) as e:
            raise BadImage(f"frame is not a decodable image: {e}") from e
        image = image.convert("RGB")
        context = np.asarray(image.resize(CONTEXT_SIZE), dtype=np.uint8)
        persons = []
        for box in self.detector.detect(image):
            left, top, width, height = box
            crop = image.crop((left, top, left + width, top + height))
            body = np.asarray(crop.resize(BODY_SIZE), dtype=np.uint8)
            try:
                prediction = self.predictor.predict(context, body)
            except Exception as e:
                raise PredictorFailure(f"predictor failed on person {len(persons)}: {e}") from e
            persons.append(PersonReading(
                select_categories(prediction.cat_scores, self.thresholds),
                prediction.vad,
            ))
        return EmotionReport(tuple(persons))


# ---------------------------------------------------------------------------
# Deterministic stubs

RGB = tuple[int, int, int]


class StubDetector:
    """Finds the bounding box of each registered marker color, in order."""

    def __init__(self, colors: Sequence[RGB]):
        self.colors = list(colors)

    def detect(self, image: Image.Image) -> list[Box]:
        arr = np.asarray(image.convert("RGB"), dtype=np.uint8)
        boxes = []
        for color in self.colors:
            mask = (arr == np.array(color, dtype=np.uint8)).all(axis=2)
            if not mask.any():
                continue
            rows = np.flatnonzero(mask.any(axis=1))
            cols = np.flatnonzero(mask.any(axis=0))
            top, bottom = int(rows[0]), int(rows[-1])
            left, right = int(cols[0]), int(cols[-1])
            boxes.append((left, top, right - left + 1, bottom - top + 1))
        return boxes


class StubPredictor:
    """Maps the body crop's dominant marker color to a fixed prediction."""

    def __init__(self, by_color: dict[RGB, RawPrediction]):
        self.by_color = dict(by_color)

    def predict(self, context: np.ndarray, body: np.ndarray) -> RawPrediction:
        if context.shape != (*CONTEXT_SIZE[::-1], 3):
            raise ValueError(f"bad context shape {context.shape}")
        if body.shape != (*BODY_SIZE[::-1], 3):
            raise ValueError(f"bad body shape {body.shape}")
        best = None
        best_count = 0
        for color, prediction in self.by_color.items():
            count = int((body == np.array(color, dtype=np.uint8)).all(axis=2).sum())
            if count > best_count:
                best, best_count = prediction, count
        if best is None:
            raise ValueError("no registered marker color in body crop")
        return best


# ---------------------------------------------------------------------------
# Listing fixtures: two persons with known selected categories and VAD

PERSON0_COLOR: RGB = (220, 40, 40)
PERSON1_COLOR: RGB = (40, 60, 220)


def _scores(**by_name: float) -> tuple[float, ...]:
    values = [0.0] * len(CATEGORIES)
    for name, value in by_name.items():
        values[CATEGORIES.index(name)] = value
    return tuple(values)


def fixture_predictions() -> dict[RGB, RawPrediction]:
    person0 = RawPrediction(
        _scores(Engagement=0.531, Excitement=0.154, Happiness=0.351, Pleasure=0.15),
        (6.384382724761963, 4.854542255401611, 6.836206436157227),
    )
    person1 = RawPrediction(
        _scores(Anticipation=0.177, Confidence=0.136, Engagement=0.513, Happiness=0.32, Pleasure=0.114),
        (6.392988204956055, 4.880496501922607, 6.800170421600342),
    )
    return {PERSON0_COLOR: person0, PERSON1_COLOR: person1}


def _png(image: Image.Image) -> bytes:
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()


def fixture_frames() -> dict[str, bytes]:
    """Synthetic camera frames for the stub pipeline.

    ``two_people`` carries both marker rectangles; ``empty`` has none.
    PNG keeps the marker colors exact.
    """
    two = Image.new("RGB", (320, 240), (245, 245, 240))
    draw = ImageDraw.Draw(two)
    draw.rectangle((40, 60, 119, 179), fill=PERSON0_COLOR)
    draw.rectangle((180, 70, 249, 179), fill=PERSON1_COLOR)
    empty = Image.new("RGB", (320, 240), (245, 245, 240))
    return {"two_people": _png(two), "empty": _png(empty)}


def stub_analyzer(thresholds: Thresholds) -> EmotionAnalyzer:
    predictions = fixture_predictions()
    return EmotionAnalyzer(
        detector=StubDetector(list(predictions)),
        predictor=StubPredictor(predictions),
        thresholds=thresholds,
    )


# ---------------------------------------------------------------------------
# HTTP surface


def create_emotion_app(analyzer: EmotionAnalyzer) -> FastAPI:
    app = FastAPI(title="wolly-emotion", docs_url=None, redoc_url=None)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/analyze")
    async def analyze(request: Request):
        frame = await request.body()
        try:
            report = await run_in_threadpool(analyzer.analyze, frame)
        except BadImage as e:
            return JSONResponse({"code": "bad_image", "reason": str(e)}, status_code=400)
        except PredictorFailure as e:
            return JSONResponse({"code": "predictor_failure", "reason": str(e)}, status_code=500)
        return Response(content=render_response(report), media_type="application/json")

    return app
