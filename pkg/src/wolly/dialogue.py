"""Rule-based dialogue with synonym-group concepts and personalization.

Rules documents are sectioned text::

    fallback: <text used when nothing matches>
    concept greet: hello, hi, hey
    rule greet_user
      trigger: greet
      template: Hi ${user.name}!
      variant low: Hi ${user.name}, let's cheer you up!

A trigger is an ordered list of concept names, with optional ``<slot>``
markers capturing the tokens between neighboring concept hits. Matching
is subsequence-style: concepts must appear in order, gaps allowed. Rule
keys: ``trigger`` (required), ``template`` (required), ``variant
low|mid|high``, ``kb: <characters_in|costars|related> <args>``, and
``interest`` (harvests a topic into the user profile).

Template placeholders: ``${user.name}``, ``${slot.N}``, ``${kb.answer}``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

from .identity import UserProfile
from .kb import KnowledgeBase

# Valence bands on the 0-10 wire scale: thirds, low < 3.33 <= mid < 6.67 <= high.
VALENCE_LOW_BOUND = 3.33
VALENCE_HIGH_BOUND = 6.67

BANDS = ("low", "mid", "high")

FALLBACK_DEFAULT = "Sorry, I did not catch that. You can ask me about movies or we can build a program!"


def valence_band(valence: float) -> str:
    if valence < VALENCE_LOW_BOUND:
        return "low"
    if valence < VALENCE_HIGH_BOUND:
        return "mid"
    return "high"


_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def normalize(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace. Idempotent."""
    return _NON_ALNUM.sub(" ", text.lower()).strip()


def tokens_of(text: str) -> list[str]:
    normalized = normalize(text)
    return normalized.split() if normalized else []


# ---------------------------------------------------------------------------
# Rules document


class LoadError(ValueError):
    def __init__(self, reason: str, rule_id: Optional[str] = None):
        self.rule_id = rule_id
        self.reason = reason
        where = f" (rule {rule_id!r})" if rule_id else ""
        super().__init__(f"{reason}{where}")


SLOT = "<slot>"


@dataclass(frozen=True)
class KbBinding:
    kind: str  # characters_in | costars | related
    args: tuple[str, ...]  # argument templates, usually ${slot.N}


@dataclass(frozen=True)
class Rule:
    id: str
    trigger: tuple[str, ...]  # concept names and SLOT markers, in order
    template: str
    variants: dict[str, str] = field(default_factory=dict)
    kb_query: Optional[KbBinding] = None
    interest: Optional[str] = None

    @property
    def concept_count(self) -> int:
        return sum(1 for item in self.trigger if item != SLOT)

    @property
    def slot_count(self) -> int:
        return sum(1 for item in self.trigger if item == SLOT)


@dataclass(frozen=True)
class RuleSet:
    concepts: dict[str, tuple[tuple[str, ...], ...]]  # name -> synonym phrases
    rules: tuple[Rule, ...]
    fallback: str = FALLBACK_DEFAULT


_PLACEHOLDER = re.compile(r"\$\{([a-z]+\.[a-zA-Z0-9_]+|kb\.answer)\}")
_KB_KINDS = ("characters_in", "costars", "related")


def _placeholders(template: str) -> list[str]:
    return _PLACEHOLDER.findall(template)


def _check_placeholders(rule_id: str, text: str, slot_count: int, has_kb: bool, what: str) -> None:
    stripped = _PLACEHOLDER.sub("", text)
    if "${" in stripped:
        raise LoadError(f"{what} has a malformed or unknown placeholder", rule_id)
    for ref in _placeholders(text):
        if ref == "user.name" or ref == "kb.answer":
            if ref == "kb.answer" and not has_kb:
                raise LoadError(f"{what} uses ${{kb.answer}} but the rule has no kb binding", rule_id)
            continue
        if ref.startswith("slot."):
            try:
                index = int(ref.split(".", 1)[1])
            except ValueError:
                raise LoadError(f"{what} has a malformed slot reference ${{{ref}}}", rule_id)
            if not 0 <= index < slot_count:
                raise LoadError(f"{what} references ${{slot.{index}}} but the trigger has {slot_count} slot(s)", rule_id)
            continue
        raise LoadError(f"{what} has an unknown placeholder ${{{ref}}}", rule_id)


def load_rules(document: str) -> RuleSet:
    """Parse and validate a rules/concepts document."""
    concepts: dict[str, tuple[tuple[str, ...], ...]] = {}
    rules: list[Rule] = []
    fallback = FALLBACK_DEFAULT

    current: Optional[dict] = None

    def finish_rule() -> None:
        nonlocal current
        if current is None:
            return
        rid = current["id"]
        if current["trigger"] is None:
            raise LoadError("rule has no trigger", rid)
        if current["template"] is None:
            raise LoadError("rule has no template", rid)
        trigger = current["trigger"]
        if not any(item != SLOT for item in trigger):
            raise LoadError("trigger needs at least one concept", rid)
        for item in trigger:
            if item != SLOT and item not in concepts:
                raise LoadError(f"trigger references undefined concept {item!r}", rid)
        rule = Rule(rid, trigger, current["template"], dict(current["variants"]),
                    current["kb"], current["interest"])
        has_kb = rule.kb_query is not None
        _check_placeholders(rid, rule.template, rule.slot_count, has_kb, "template")
        for band, text in rule.variants.items():
            _check_placeholders(rid, text, rule.slot_count, has_kb, f"variant {band}")
        if rule.interest is not None:
            _check_placeholders(rid, rule.interest, rule.slot_count, has_kb, "interest")
        if has_kb:
            for arg in rule.kb_query.args:
                _check_placeholders(rid, arg, rule.slot_count, False, "kb argument")
        if any(r.id == rid for r in rules):
            raise LoadError("duplicate rule id", rid)
        rules.append(rule)
        current = None

    for n, raw in enumerate(document.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("fallback:"):
            finish_rule()
            fallback = line.split(":", 1)[1].strip()
            continue
        if line.startswith("concept "):
            finish_rule()
            head, _, body = line[len("concept "):].partition(":")
            name = head.strip()
            if not name:
                raise LoadError(f"line {n}: concept needs a name")
            if name in concepts:
                raise LoadError(f"line {n}: concept {name!r} defined twice")
            phrases = []
            for synonym in body.split(","):
                words = tuple(tokens_of(synonym))
                if words:
                    phrases.append(words)
            if not phrases:
                raise LoadError(f"line {n}: concept {name!r} needs at least one synonym")
            concepts[name] = tuple(phrases)
            continue
        if line.startswith("rule "):
            finish_rule()
            rid = line[len("rule "):].strip()
            if not rid:
                raise LoadError(f"line {n}: rule needs an id")
            current = {"id": rid, "trigger": None, "template": None,
                       "variants": {}, "kb": None, "interest": None}
            continue
        if current is None:
            raise LoadError(f"line {n}: unexpected content outside any rule: {line!r}")
        key, sep, value = line.partition(":")
        if not sep:
            raise LoadError(f"line {n}: expected 'key: value'", current["id"])
        key = key.strip()
        value = value.strip()
        if key == "trigger":
            items = []
            for part in value.split(","):
                part = part.strip()
                if part == SLOT:
                    items.append(SLOT)
                elif part:
                    items.append(part)
            current["trigger"] = tuple(items)
        elif key == "template":
            current["template"] = value
        elif key.startswith("variant"):
            band = key[len("variant"):].strip()
            if band not in BANDS:
                raise LoadError(f"unknown variant band {band!r}", current["id"])
            current["variants"][band] = value
        elif key == "kb":
            parts = value.split()
            if not parts or parts[0] not in _KB_KINDS:
                raise LoadError(f"unknown kb query kind in {value!r}", current["id"])
            current["kb"] = KbBinding(parts[0], tuple(parts[1:]))
        elif key == "interest":
            current["interest"] = value
        else:
            raise LoadError(f"line {n}: unknown rule key {key!r}", current["id"])
    finish_rule()
    return RuleSet(concepts, tuple(rules), fallback)


# ---------------------------------------------------------------------------
# Matching


@dataclass(frozen=True)
class Matched:
    rule: Rule
    slots: tuple[str, ...]


def _find_phrase(tokens: Sequence[str], phrases: Sequence[tuple[str, ...]], start: int) -> Optional[tuple[int, int]]:
    """Earliest match of any phrase at or after start; longest wins on ties."""
    best: Optional[tuple[int, int]] = None
    for pos in range(start, len(tokens)):
        longest = None
        for phrase in phrases:
            end = pos + len(phrase)
            if end <= len(tokens) and tuple(tokens[pos:end]) == phrase:
                if longest is None or end > longest:
                    longest = end
        if longest is not None:
            return (pos, longest)
    return None


def _match_rule(tokens: Sequence[str], rule: Rule, concepts: dict) -> Optional[tuple[str, ...]]:
    slots: list[str] = []
    pos = 0
    pending_slot = False
    for item in rule.trigger:
        if item == SLOT:
            pending_slot = True
            continue
        min_start = pos + 1 if pending_slot else pos
        hit = _find_phrase(tokens, concepts[item], min_start)
        if hit is None:
            return None
        start, end = hit
        if pending_slot:
            slots.append(" ".join(tokens[pos:start]))
            pending_slot = False
        pos = end
    if pending_slot:
        if pos >= len(tokens):
            return None
        slots.append(" ".join(tokens[pos:]))
    return tuple(slots)


def match(utterance: str, rules: RuleSet) -> Optional[Matched]:
    """Best-matching rule: maximal concept count, ties by definition order."""
    tokens = tokens_of(utterance)
    best: Optional[Matched] = None
    for rule in rules.rules:
        slots = _match_rule(tokens, rule, rules.concepts)
        if slots is None:
            continue
        if best is None or rule.concept_count > best.rule.concept_count:
            best = Matched(rule, slots)
    return best


# ---------------------------------------------------------------------------
# Dialogue context and acts


ENROLLMENT_STEPS = ("ask_name", "ask_age", "ask_photo_consent", "done")


@dataclass(frozen=True)
class EnrollmentState:
    step: str
    name: Optional[str] = None
    age: Optional[int] = None
    photo_consent: Optional[bool] = None

    def __post_init__(self) -> None:
        if self.step not in ENROLLMENT_STEPS:
            raise ValueError(f"unknown enrollment step {self.step!r}")


@dataclass(frozen=True)
class DialogueContext:
    profile: Optional[UserProfile] = None
    latest_emotion: Optional[tuple[tuple[str, ...], tuple[float, float, float]]] = None
    pending: Optional[EnrollmentState] = None


@dataclass(frozen=True)
class RecordInterest:
    topic: str


@dataclass(frozen=True)
class RequestEnrollmentStep:
    step: str
    name: Optional[str] = None
    age: Optional[int] = None
    photo_consent: Optional[bool] = None


@dataclass(frozen=True)
class KbQuery:
    kind: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class RecordInteraction:
    categories: tuple[str, ...]
    vad: tuple[float, float, float]


Act = Union[RecordInterest, RequestEnrollmentStep, KbQuery, RecordInteraction]


@dataclass(frozen=True)
class Reply:
    text: str
    acts: tuple[Act, ...]
    ctx: DialogueContext


# ---------------------------------------------------------------------------
# Responding

_NAME_PREFIXES = (("my", "name", "is"), ("i", "am"), ("im",), ("call", "me"))
_YES_WORDS = {"yes", "yeah", "yep", "sure", "ok", "okay", "course", "certainly"}
_NO_WORDS = {"no", "nope", "nah", "never", "dont", "not"}


def _extract_name(utterance: str) -> str:
    words = tokens_of(utterance)
    for prefix in _NAME_PREFIXES:
        if len(words) > len(prefix) and tuple(words[:len(prefix)]) == prefix:
            words = words[len(prefix):]
            break
    return " ".join(w.capitalize() for w in words)


def _extract_age(utterance: str) -> Optional[int]:
    m = re.search(r"\d+", utterance)
    if m is None:
        return None
    return int(m.group())


def _enrollment_reply(utterance: str, ctx: DialogueContext) -> Reply:
    pending = ctx.pending
    if pending.step == "ask_name":
        name = _extract_name(utterance)
        if not name:
            return Reply("Sorry, I did not get that. What is your name?", (), ctx)
        nxt = EnrollmentState("ask_age", name=name)
        return Reply(
            f"Nice to meet you, {name}! How old are you?",
            (RequestEnrollmentStep("ask_age", name=name),),
            replace(ctx, pending=nxt),
        )
    if pending.step == "ask_age":
        age = _extract_age(utterance)
        if age is None or age < 0:
            return Reply("Tell me your age as a number, please!", (), ctx)
        nxt = replace(pending, step="ask_photo_consent", age=age)
        return Reply(
            "Great! May I take a picture of you so I recognize you next time? (yes/no)",
            (RequestEnrollmentStep("ask_photo_consent", name=pending.name, age=age),),
            replace(ctx, pending=nxt),
        )
    # ask_photo_consent
    words = set(tokens_of(utterance))
    if words & _YES_WORDS and not words & _NO_WORDS:
        consent = True
    elif words & _NO_WORDS:
        consent = False
    else:
        return Reply("Just say yes or no: may I keep a picture of you?", (), ctx)
    done = replace(ctx.pending, step="done", photo_consent=consent)
    act = RequestEnrollmentStep("done", name=done.name, age=done.age, photo_consent=consent)
    text = f"All set, {done.name}! Now we can play. Try asking me about movies!"
    return Reply(text, (act,), replace(ctx, pending=done))


def _humanize(kb: KnowledgeBase, iris: Sequence[str]) -> str:
    names = sorted(kb.name_of(iri) or iri.rsplit("/", 1)[-1] for iri in iris)
    if not names:
        return "no one I know of"
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


def _resolve_entity(kb: KnowledgeBase, mention: str) -> Optional[str]:
    if ":" in mention:  # already an IRI
        return mention if kb.has_entity(mention) else None
    named = kb.subjects_named(mention)
    return sorted(named)[0] if named else None


def _run_kb_query(binding: KbBinding, slots: Sequence[str], kb: KnowledgeBase) -> tuple[str, KbQuery]:
    args = tuple(_substitute(a, None, slots, "") for a in binding.args)
    act = KbQuery(binding.kind, args)
    mention = args[0] if args else ""
    entity = _resolve_entity(kb, mention)
    if entity is None:
        return f"I do not know {mention} yet", act
    if binding.kind == "characters_in":
        return _humanize(kb, kb.characters_in(entity)), act
    if binding.kind == "costars":
        return _humanize(kb, kb.costars(entity)), act
    k = int(args[1]) if len(args) > 1 and args[1].isdigit() else 3
    return _humanize(kb, kb.related_topics(entity, k)), act


def _substitute(template: str, profile: Optional[UserProfile], slots: Sequence[str], kb_answer: str) -> str:
    def repl(m: re.Match) -> str:
        ref = m.group(1)
        if ref == "user.name":
            return profile.name if profile is not None else "friend"
        if ref == "kb.answer":
            return kb_answer
        index = int(ref.split(".", 1)[1])
        return slots[index]

    return _PLACEHOLDER.sub(repl, template)


def respond(utterance: str, ctx: DialogueContext, rules: RuleSet, kb: KnowledgeBase) -> Reply:
    """Total transition: always returns non-empty text plus emitted acts."""
    if ctx.pending is not None and ctx.pending.step != "done":
        return _enrollment_reply(utterance, ctx)
    if ctx.profile is None:
        # Unknown user: ask who they are before anything else.
        return Reply(
            "Hi, I am Wolly! I do not think we have met. What is your name?",
            (RequestEnrollmentStep("ask_name"),),
            replace(ctx, pending=EnrollmentState("ask_name")),
        )
    hit = match(utterance, rules)
    if hit is None:
        return Reply(rules.fallback, (), ctx)
    acts: list[Act] = []
    kb_answer = ""
    if hit.rule.kb_query is not None:
        kb_answer, act = _run_kb_query(hit.rule.kb_query, hit.slots, kb)
        acts.append(act)
    if hit.rule.interest is not None:
        topic = _substitute(hit.rule.interest, ctx.profile, hit.slots, kb_answer)
        if topic:
            acts.append(RecordInterest(topic))
    template = hit.rule.template
    if hit.rule.variants and ctx.latest_emotion is not None:
        band = valence_band(ctx.latest_emotion[1][0])
        template = hit.rule.variants.get(band, template)
    text = _substitute(template, ctx.profile, hit.slots, kb_answer)
    return Reply(text, tuple(acts), ctx)


def observe_emotion(ctx: DialogueContext, report) -> tuple[DialogueContext, tuple[Act, ...]]:
    """Fold an emotion report into the context (person 0 wins)."""
    if not report.persons:
        return ctx, ()
    person = report.persons[0]
    categories = tuple(person.emotions)
    vad = tuple(person.vad)
    new_ctx = replace(ctx, latest_emotion=(categories, vad))
    return new_ctx, (RecordInteraction(categories, vad),)
