"""Access to the data files shipped inside the package."""

from __future__ import annotations

from importlib import resources

from .emotion.wire import Thresholds
from .kb import KnowledgeBase


def _read_text(name: str) -> str:
    return resources.files("wolly").joinpath("data").joinpath(name).read_text(encoding="utf-8")


def default_thresholds() -> Thresholds:
    """The shipped operating thresholds (0.5 everywhere)."""
    return Thresholds.from_text(_read_text("thresholds_default.txt"))


def demo_thresholds() -> Thresholds:
    """Permissive thresholds matched to the stub predictor's fixtures."""
    return Thresholds.from_text(_read_text("thresholds_demo.txt"))


def fixture_ontology_text() -> str:
    return _read_text("ontology.nt")


def fixture_kb() -> KnowledgeBase:
    kb = KnowledgeBase()
    kb.load_triples(fixture_ontology_text())
    return kb


def default_rules_text() -> str:
    return _read_text("rules.txt")
