import random

import pytest

from wolly.assets import fixture_kb
from wolly.kb import (
    FOAF_NAME,
    FOAF_PERSON,
    RDF_TYPE,
    RDFS_SUBCLASSOF,
    SCHEMA_MOVIE,
    STARS_IN,
    KnowledgeBase,
    Literal,
    Triple,
    UnknownEntity,
    parse_triples,
)
from wolly.model import ParseError

EX = "http://wolly.example.org/"
TOY_STORY = EX + "movie/toy-story"
NEMO_MOVIE = EX + "movie/finding-nemo"
WOODY = EX + "character/woody"
BUZZ = EX + "character/buzz"
DORY = EX + "character/dory"
CARTOON = EX + "ontology#Cartoon"


class TestParser:
    def test_simple_triple(self):
        got = parse_triples("<ex:a> <ex:b> <ex:c> .")
        assert got == [Triple("ex:a", "ex:b", "ex:c")]

    def test_literal_object(self):
        got = parse_triples('<ex:a> <ex:name> "Woody" .')
        assert got == [Triple("ex:a", "ex:name", Literal("Woody"))]

    def test_language_tag(self):
        got = parse_triples('<ex:a> <ex:name> "Woody"@en-US .')
        assert got[0].object == Literal("Woody", "en-US")

    def test_escapes(self):
        got = parse_triples(r'<ex:a> <ex:name> "say \"hi\"\n" .')
        assert got[0].object == Literal('say "hi"\n')

    def test_comments_and_blank_lines(self):
        text = "# a comment\n\n<ex:a> <ex:b> <ex:c> .\n"
        assert len(parse_triples(text)) == 1

    def test_missing_dot_reports_line(self):
        text = "<ex:a> <ex:b> <ex:c> .\n<ex:d> <ex:e> <ex:f>\n"
        with pytest.raises(ParseError) as ei:
            parse_triples(text)
        assert ei.value.line == 2

    def test_relative_iri_rejected(self):
        with pytest.raises(ParseError):
            parse_triples("<a> <ex:b> <ex:c> .")

    def test_literal_subject_rejected(self):
        with pytest.raises(ParseError):
            parse_triples('"Woody" <ex:b> <ex:c> .')

    def test_trailing_garbage_rejected(self):
        with pytest.raises(ParseError):
            parse_triples("<ex:a> <ex:b> <ex:c> . extra")

    def test_unterminated_literal(self):
        with pytest.raises(ParseError):
            parse_triples('<ex:a> <ex:b> "oops .')

    def test_bad_language_tag(self):
        with pytest.raises(ParseError):
            parse_triples('<ex:a> <ex:b> "x"@9 .')


class TestLoad:
    def test_count_added(self):
        kb = KnowledgeBase()
        assert kb.load_triples("<ex:a> <ex:b> <ex:c> .") == 1

    def test_duplicates_collapse(self):
        kb = KnowledgeBase()
        text = "<ex:a> <ex:b> <ex:c> .\n<ex:a> <ex:b> <ex:c> .\n"
        assert kb.load_triples(text) == 1
        assert len(kb) == 1

    def test_idempotent_reload(self):
        kb = KnowledgeBase()
        text = "<ex:a> <ex:b> <ex:c> .\n<ex:a> <ex:b> \"lit\" .\n"
        kb.load_triples(text)
        snapshot = kb.triples()
        assert kb.load_triples(text) == 0
        assert kb.triples() == snapshot

    def test_all_or_nothing(self):
        kb = KnowledgeBase()
        text = "<ex:a> <ex:b> <ex:c> .\nbroken line\n"
        with pytest.raises(ParseError):
            kb.load_triples(text)
        assert len(kb) == 0

    def test_fixture_ontology_loads(self):
        kb = fixture_kb()
        assert len(kb) >= 20


class TestIndexes:
    def test_match_equals_full_scan(self):
        rng = random.Random(8)
        kb = random_kb(rng, 120)
        everything = kb.triples()
        for _ in range(200):
            t = rng.choice(sorted(everything, key=repr))
            patterns = [
                dict(subject=t.subject),
                dict(predicate=t.predicate),
                dict(object=t.object),
                dict(subject=t.subject, predicate=t.predicate),
                dict(subject=t.subject, predicate=t.predicate, object=t.object),
            ]
            pattern = rng.choice(patterns)
            got = kb.match(**pattern)
            want = {
                x for x in everything
                if all(getattr(x, k) == v for k, v in pattern.items())
            }
            assert got == want


class TestQueries:
    def test_characters_in_fixture(self):
        kb = fixture_kb()
        assert kb.characters_in(TOY_STORY) == {WOODY, BUZZ}

    def test_characters_in_unknown_movie(self):
        kb = fixture_kb()
        assert kb.characters_in(EX + "movie/cars") == set()

    def test_costars_fixture(self):
        kb = fixture_kb()
        assert kb.costars(WOODY) == {BUZZ}

    def test_costars_no_movies(self):
        kb = fixture_kb()
        assert kb.costars(EX + "character/ghost") == set()

    def test_describe(self):
        kb = fixture_kb()
        triples = kb.describe(WOODY)
        assert Triple(WOODY, STARS_IN, TOY_STORY) in triples
        assert Triple(WOODY, FOAF_NAME, Literal("Woody")) in triples
        assert triples <= kb.triples()

    def test_describe_absent(self):
        kb = fixture_kb()
        assert kb.describe(EX + "nothing") == set()

    def test_describe_object_position(self):
        kb = fixture_kb()
        triples = kb.describe(TOY_STORY)
        assert Triple(WOODY, STARS_IN, TOY_STORY) in triples

    def test_subjects_named_case_insensitive(self):
        kb = fixture_kb()
        assert kb.subjects_named("toy story") == {TOY_STORY}
        assert kb.name_of(BUZZ) == "Buzz Lightyear"


class TestRelatedTopics:
    def test_sibling_movie_ranks_first(self):
        kb = KnowledgeBase()
        kb.load_triples(
            f"<{EX}m1> <{RDF_TYPE}> <{EX}Cartoon> .\n"
            f"<{EX}m2> <{RDF_TYPE}> <{EX}Cartoon> .\n"
            f"<{EX}Cartoon> <{RDFS_SUBCLASSOF}> <{SCHEMA_MOVIE}> .\n"
        )
        got = kb.related_topics(EX + "m1", 5)
        assert got[0] == EX + "m2"

    def test_class_query_reaches_taxonomy(self):
        kb = fixture_kb()
        got = kb.related_topics(CARTOON, 10)
        assert SCHEMA_MOVIE in got

    def test_k_limits_results(self):
        kb = fixture_kb()
        assert len(kb.related_topics(TOY_STORY, 1)) == 1

    def test_k_larger_than_candidates(self):
        kb = fixture_kb()
        got = kb.related_topics(TOY_STORY, 100)
        assert TOY_STORY not in got
        assert len(got) == len(set(got))

    def test_unknown_entity(self):
        kb = fixture_kb()
        with pytest.raises(UnknownEntity):
            kb.related_topics(EX + "nope", 3)

    def test_k_zero_rejected(self):
        kb = fixture_kb()
        with pytest.raises(ValueError):
            kb.related_topics(TOY_STORY, 0)


# ---------------------------------------------------------------------------
# Brute-force oracles over randomly generated knowledge bases


def random_kb(rng: random.Random, max_triples: int) -> KnowledgeBase:
    classes = [f"{EX}cls/{i}" for i in range(rng.randint(2, 6))]
    movies = [f"{EX}m/{i}" for i in range(rng.randint(1, 6))]
    people = [f"{EX}p/{i}" for i in range(rng.randint(2, 12))]
    triples = set()
    for i, cls in enumerate(classes[1:], start=1):
        parent = classes[rng.randrange(i)]
        triples.add(Triple(cls, RDFS_SUBCLASSOF, parent))
    for m in movies:
        if rng.random() < 0.9:
            triples.add(Triple(m, RDF_TYPE, rng.choice(classes)))
    for p in people:
        if rng.random() < 0.8:
            triples.add(Triple(p, RDF_TYPE, FOAF_PERSON))
        for m in movies:
            if rng.random() < 0.35:
                triples.add(Triple(p, STARS_IN, m))
        if rng.random() < 0.4:
            triples.add(Triple(p, FOAF_NAME, Literal(f"Person {p[-1]}")))
    kb = KnowledgeBase()
    kb.add_triples(list(triples)[:max_triples])
    return kb


def characters_in_oracle(kb, movie):
    return {t.subject for t in kb.triples() if t.predicate == STARS_IN and t.object == movie}


def costars_oracle(kb, character):
    # Nested-loop join over the raw triple list.
    out = set()
    for t1 in kb.triples():
        if t1.subject == character and t1.predicate == STARS_IN:
            for t2 in kb.triples():
                if t2.predicate == STARS_IN and t2.object == t1.object:
                    out.add(t2.subject)
    out.discard(character)
    return out


def related_oracle(kb, entity, k):
    # BFS over an adjacency map built by brute-force scans.
    triples = kb.triples()
    nodes = {t.subject for t in triples} | {t.object for t in triples if isinstance(t.object, str)}
    edges = {n: set() for n in nodes}

    def classes_of(x):
        return {t.object for t in triples if t.subject == x and t.predicate == RDF_TYPE}

    for a in nodes:
        for b in nodes:
            if a == b:
                continue
            if classes_of(a) & classes_of(b):
                edges[a].add(b)
    for t in triples:
        if t.predicate == RDFS_SUBCLASSOF and isinstance(t.object, str):
            edges[t.subject].add(t.object)
            edges[t.object].add(t.subject)
    seen = {entity: 0}
    frontier = [entity]
    ranked = []
    d = 0
    while frontier:
        d += 1
        nxt = []
        for node in frontier:
            for nb in edges.get(node, ()):
                if nb not in seen:
                    seen[nb] = d
                    ranked.append((d, nb))
                    nxt.append(nb)
        frontier = nxt
    ranked.sort()
    return [iri for _, iri in ranked[:k]]


class TestOracles:
    def test_random_kbs_match_oracles(self):
        rng = random.Random(424242)
        for _ in range(40):
            kb = random_kb(rng, 200)
            entities = sorted(kb.entities())
            for e in entities:
                assert kb.characters_in(e) == characters_in_oracle(kb, e)
                assert kb.costars(e) == costars_oracle(kb, e)
                assert kb.related_topics(e, 10) == related_oracle(kb, e, 10)

    def test_costar_symmetry_and_irreflexivity(self):
        rng = random.Random(11)
        for _ in range(20):
            kb = random_kb(rng, 200)
            entities = sorted(kb.entities())
            for a in entities:
                costars = kb.costars(a)
                assert a not in costars
                for b in costars:
                    assert a in kb.costars(b)
