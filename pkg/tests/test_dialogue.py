import pytest
from hypothesis import given, strategies as st

from wolly.assets import default_rules_text, fixture_kb
from wolly.chat import ChatService, pseudo_embedding
from wolly.dialogue import (
    DialogueContext,
    EnrollmentState,
    KbQuery,
    LoadError,
    Matched,
    RecordInterest,
    RecordInteraction,
    RequestEnrollmentStep,
    load_rules,
    match,
    normalize,
    observe_emotion,
    respond,
    valence_band,
)
from wolly.emotion import EmotionReport, PersonReading
from wolly.identity import IdentityRegistry
from wolly.kb import KnowledgeBase
from test_emotion_wire import listing_report

RULES_DOC = """
fallback: I did not get that.

concept greet: hello, hi, hey
concept who: who
concept starring: stars in, star in
concept like: i like, i love

rule greet_user
  trigger: greet
  template: Hi ${user.name}!
  variant low: Hi ${user.name}, cheer up!
  variant high: Hey ${user.name}, you look great!

rule greet_and_ask
  trigger: greet, who
  template: Hello and who indeed!

rule who_stars
  trigger: who, starring, <slot>
  kb: characters_in ${slot.0}
  template: In ${slot.0} you can see ${kb.answer}.

rule likes
  trigger: like, <slot>
  interest: ${slot.0}
  template: Noted: you like ${slot.0}.
"""


@pytest.fixture(scope="module")
def rules():
    return load_rules(RULES_DOC)


@pytest.fixture()
def kb():
    return fixture_kb()


def known_ctx(name="Ada"):
    reg = IdentityRegistry(dim=4)
    pid = reg.enroll(name, 9, [0.0] * 4)
    return DialogueContext(profile=reg.get(pid))


class TestNormalize:
    def test_basic(self):
        assert normalize("Hi!!  There") == "hi there"

    @given(st.text(max_size=80))
    def test_idempotent(self, text):
        assert normalize(normalize(text)) == normalize(text)


class TestLoadRules:
    def test_loads_four_rules(self, rules):
        assert len(rules.rules) == 4
        assert rules.fallback == "I did not get that."

    def test_undefined_concept_rejected(self):
        doc = "concept a: x\nrule r\n  trigger: missing\n  template: t\n"
        with pytest.raises(LoadError) as ei:
            load_rules(doc)
        assert "undefined concept" in str(ei.value)

    def test_duplicate_rule_ids_rejected(self):
        doc = ("concept a: x\n"
               "rule r\n  trigger: a\n  template: t\n"
               "rule r\n  trigger: a\n  template: u\n")
        with pytest.raises(LoadError):
            load_rules(doc)

    def test_bad_slot_reference_rejected(self):
        doc = "concept a: x\nrule r\n  trigger: a\n  template: ${slot.0}\n"
        with pytest.raises(LoadError) as ei:
            load_rules(doc)
        assert "slot" in str(ei.value)

    def test_kb_answer_without_binding_rejected(self):
        doc = "concept a: x\nrule r\n  trigger: a\n  template: ${kb.answer}\n"
        with pytest.raises(LoadError):
            load_rules(doc)

    def test_unknown_placeholder_rejected(self):
        doc = "concept a: x\nrule r\n  trigger: a\n  template: ${bogus.thing}\n"
        with pytest.raises(LoadError):
            load_rules(doc)

    def test_default_rules_document_loads(self):
        rs = load_rules(default_rules_text())
        assert len(rs.rules) >= 5


class TestMatch:
    def test_synonym_hit_with_punctuation(self, rules):
        got = match("Hi!!", rules)
        assert got is not None and got.rule.id == "greet_user"

    def test_no_match(self, rules):
        assert match("zzz", rules) is None

    def test_specificity_two_concepts_win(self, rules):
        got = match("hello, who are you", rules)
        assert got is not None and got.rule.id == "greet_and_ask"

    def test_in_order_requirement(self, rules):
        # who_stars needs who ... stars in ... <slot>; reversed order fails.
        assert match("stars in toy story who", rules) is None

    def test_slot_capture(self, rules):
        got = match("who stars in Toy Story?", rules)
        assert got is not None and got.rule.id == "who_stars"
        assert got.slots == ("toy story",)

    def test_slot_requires_token(self, rules):
        assert match("who stars in", rules) is None

    def test_determinism(self, rules):
        a = match("hello there", rules)
        b = match("hello there", rules)
        assert a == b

    def test_added_concept_narrows(self, rules):
        # Every utterance matching greet_and_ask also matches greet_user.
        for utterance in ("hello who", "hey who is that", "hi! who?"):
            assert match(utterance, rules) is not None
            narrowed = _match_only(rules, "greet_and_ask", utterance)
            widened = _match_only(rules, "greet_user", utterance)
            assert narrowed is None or widened is not None


def _match_only(rules, rule_id, utterance):
    from wolly.dialogue import RuleSet
    subset = RuleSet(rules.concepts, tuple(r for r in rules.rules if r.id == rule_id), rules.fallback)
    return match(utterance, subset)


class TestRespond:
    def test_known_user_greeted_by_name(self, rules, kb):
        reply = respond("hello!", known_ctx("Ada"), rules, kb)
        assert "Ada" in reply.text

    def test_unknown_user_starts_enrollment(self, rules, kb):
        reply = respond("hello", DialogueContext(), rules, kb)
        assert reply.ctx.pending == EnrollmentState("ask_name")
        assert RequestEnrollmentStep("ask_name") in reply.acts
        assert "name" in reply.text.lower()

    def test_who_stars_returns_both_characters(self, rules, kb):
        reply = respond("who stars in toy story?", known_ctx(), rules, kb)
        assert "Woody" in reply.text and "Buzz Lightyear" in reply.text
        assert KbQuery("characters_in", ("toy story",)) in reply.acts

    def test_unknown_movie_still_answers(self, rules, kb):
        reply = respond("who stars in duckburg tales?", known_ctx(), rules, kb)
        assert reply.text != ""

    def test_fallback_on_no_match(self, rules, kb):
        reply = respond("qwerty", known_ctx(), rules, kb)
        assert reply.text == rules.fallback

    def test_interest_act_emitted(self, rules, kb):
        reply = respond("I like cartoons", known_ctx(), rules, kb)
        assert RecordInterest("cartoons") in reply.acts

    def test_totality_always_text(self, rules, kb):
        for utterance in ("", "!!", "who", "hello hello hello"):
            assert respond(utterance, known_ctx(), rules, kb).text

    def test_variant_by_valence_band(self, rules, kb):
        low = known_ctx()
        low = DialogueContext(profile=low.profile, latest_emotion=(("Sadness",), (2.0, 5.0, 5.0)))
        assert "cheer up" in respond("hello", low, rules, kb).text
        high = DialogueContext(profile=low.profile, latest_emotion=(("Happiness",), (8.0, 5.0, 5.0)))
        assert "look great" in respond("hello", high, rules, kb).text
        mid = DialogueContext(profile=low.profile, latest_emotion=(("Peace",), (5.0, 5.0, 5.0)))
        assert respond("hello", mid, rules, kb).text == "Hi Ada!"


class TestEnrollmentScript:
    def test_full_sequence(self, rules, kb):
        ctx = DialogueContext()
        r1 = respond("hi", ctx, rules, kb)
        assert r1.ctx.pending.step == "ask_name"
        r2 = respond("my name is Ada", r1.ctx, rules, kb)
        assert r2.ctx.pending.step == "ask_age"
        assert r2.ctx.pending.name == "Ada"
        r3 = respond("I am 9 years old", r2.ctx, rules, kb)
        assert r3.ctx.pending.step == "ask_photo_consent"
        assert r3.ctx.pending.age == 9
        r4 = respond("yes please", r3.ctx, rules, kb)
        assert r4.ctx.pending.step == "done"
        done = [a for a in r4.acts if isinstance(a, RequestEnrollmentStep)][0]
        assert done == RequestEnrollmentStep("done", name="Ada", age=9, photo_consent=True)

    def test_consent_no(self, rules, kb):
        ctx = DialogueContext(pending=EnrollmentState("ask_photo_consent", name="Bo", age=7))
        reply = respond("no thanks", ctx, rules, kb)
        done = [a for a in reply.acts if isinstance(a, RequestEnrollmentStep)][0]
        assert done.photo_consent is False

    def test_bad_age_reasks(self, rules, kb):
        ctx = DialogueContext(pending=EnrollmentState("ask_age", name="Bo"))
        reply = respond("quite old", ctx, rules, kb)
        assert reply.ctx.pending.step == "ask_age"

    def test_ambiguous_consent_reasks(self, rules, kb):
        ctx = DialogueContext(pending=EnrollmentState("ask_photo_consent", name="Bo", age=7))
        reply = respond("maybe", ctx, rules, kb)
        assert reply.ctx.pending.step == "ask_photo_consent"


class TestObserveEmotion:
    def test_listing_person0_mid_band(self):
        ctx, acts = observe_emotion(DialogueContext(), listing_report())
        assert ctx.latest_emotion is not None
        categories, vad = ctx.latest_emotion
        assert categories == ("Engagement", "Excitement", "Happiness", "Pleasure")
        assert valence_band(vad[0]) == "mid"
        assert acts and isinstance(acts[0], RecordInteraction)

    def test_empty_report_no_change(self):
        ctx = DialogueContext()
        new_ctx, acts = observe_emotion(ctx, EmotionReport(()))
        assert new_ctx == ctx and acts == ()

    def test_latest_wins(self):
        first = EmotionReport((PersonReading({"Anger": "90.00"}, (1.0, 5.0, 5.0)),))
        second = EmotionReport((PersonReading({"Peace": "80.00"}, (9.0, 5.0, 5.0)),))
        ctx, _ = observe_emotion(DialogueContext(), first)
        ctx, _ = observe_emotion(ctx, second)
        assert ctx.latest_emotion[0] == ("Peace",)


class TestValenceBands:
    @pytest.mark.parametrize("v,band", [
        (0.0, "low"), (3.32, "low"), (3.33, "mid"), (6.384382724761963, "mid"),
        (6.66, "mid"), (6.67, "high"), (10.0, "high"),
    ])
    def test_boundaries(self, v, band):
        assert valence_band(v) == band


class TestChatService:
    def make(self, tmp_path=None):
        registry = IdentityRegistry(dim=16)
        service = ChatService(load_rules(RULES_DOC), fixture_kb(), registry)
        return service, registry

    def test_enrollment_end_to_end(self):
        service, registry = self.make()
        emb = pseudo_embedding("s1", 16)
        service.chat("s1", "hello", embedding=emb)
        service.chat("s1", "Ada")
        service.chat("s1", "9")
        out = service.chat("s1", "yes")
        assert "Ada" in out
        profiles = registry.profiles()
        assert len(profiles) == 1
        assert profiles[0].name == "Ada" and profiles[0].age == 9

    def test_known_user_recognized_in_new_session(self):
        service, registry = self.make()
        emb = [0.25] * 16
        registry.enroll("Zoe", 8, emb)
        out = service.chat("fresh", "hello!", embedding=emb)
        assert "Zoe" in out

    def test_interests_recorded(self):
        service, registry = self.make()
        emb = [0.5] * 16
        pid = registry.enroll("Kim", 10, emb)
        service.chat("s2", "hi", embedding=emb)
        service.chat("s2", "i like space movies")
        assert registry.get(pid).interests == ["space movies"]

    def test_emotion_report_logged_for_known_profile(self):
        service, registry = self.make()
        emb = [0.75] * 16
        pid = registry.enroll("Joy", 9, emb)
        service.chat("s3", "hello", embedding=emb)
        service.on_emotion_report(listing_report())
        log = registry.get(pid).emotion_log
        assert len(log) == 1
        assert log[0].categories == ("Engagement", "Excitement", "Happiness", "Pleasure")
