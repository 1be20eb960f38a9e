"""Per-session chat coordination: dialogue engine + identity + knowledge base.

The dialogue engine itself is pure; this layer owns session contexts,
executes emitted acts (enrollment, interest harvesting, emotion logging),
and feeds emotion reports into every live session.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .dialogue import (
    DialogueContext,
    KbQuery,
    RecordInterest,
    RecordInteraction,
    RequestEnrollmentStep,
    RuleSet,
    observe_emotion,
    respond,
)
from .emotion.wire import EmotionReport
from .identity import IdentityRegistry
from .kb import KnowledgeBase


def pseudo_embedding(session_id: str, dim: int) -> list[float]:
    """Deterministic per-session stand-in when no face embedding arrives.

    Distinct sessions land far apart, so enrollment without a sensor
    still produces recognizable (within that session) profiles.
    """
    out: list[float] = []
    counter = 0
    while len(out) < dim:
        digest = hashlib.sha256(f"{session_id}:{counter}".encode()).digest()
        out.extend(b / 255.0 for b in digest)
        counter += 1
    return out[:dim]


@dataclass
class _SessionState:
    ctx: DialogueContext = field(default_factory=DialogueContext)
    embedding: Optional[list[float]] = None
    picture_ref: Optional[str] = None


class ChatService:
    def __init__(self, rules: RuleSet, kb: KnowledgeBase, registry: IdentityRegistry):
        self.rules = rules
        self.kb = kb
        self.registry = registry
        self._lock = threading.RLock()
        self._sessions: dict[str, _SessionState] = {}
        self.latest_report: Optional[EmotionReport] = None

    def chat(self, session_id: str, text: str,
             embedding: Optional[Sequence[float]] = None,
             picture_ref: Optional[str] = None) -> str:
        with self._lock:
            state = self._sessions.setdefault(session_id, _SessionState())
            if embedding is not None:
                state.embedding = list(embedding)
            if picture_ref is not None:
                state.picture_ref = picture_ref
            if state.ctx.profile is None and state.ctx.pending is None and state.embedding is not None:
                hit = self.registry.recognize(state.embedding)
                if hit is not None:
                    state.ctx = replace(state.ctx, profile=self.registry.get(hit.profile_id))
            reply = respond(text, state.ctx, self.rules, self.kb)
            state.ctx = reply.ctx
            for act in reply.acts:
                self._execute(session_id, state, act)
            return reply.text

    def _execute(self, session_id: str, state: _SessionState, act) -> None:
        if isinstance(act, RequestEnrollmentStep) and act.step == "done":
            embedding = state.embedding or pseudo_embedding(session_id, self.registry.dim)
            picture = state.picture_ref if act.photo_consent else None
            pid = self.registry.enroll(act.name, act.age, embedding, picture)
            state.ctx = replace(state.ctx, profile=self.registry.get(pid), pending=None)
        elif isinstance(act, RecordInterest):
            if state.ctx.profile is not None:
                self.registry.record_interaction(state.ctx.profile.id, [act.topic])
        elif isinstance(act, KbQuery):
            pass  # executed inline by the engine

    def on_emotion_report(self, report: EmotionReport) -> None:
        """Update every live session with the newest report (person 0)."""
        with self._lock:
            self.latest_report = report
            for state in self._sessions.values():
                new_ctx, acts = observe_emotion(state.ctx, report)
                state.ctx = new_ctx
                for act in acts:
                    if isinstance(act, RecordInteraction) and state.ctx.profile is not None:
                        self.registry.record_interaction(
                            state.ctx.profile.id, [], (act.categories, act.vad))

    def context(self, session_id: str) -> Optional[DialogueContext]:
        with self._lock:
            state = self._sessions.get(session_id)
            return state.ctx if state else None
