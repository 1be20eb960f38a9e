"""Triple store for the movie/cartoon ontology and its query operations.

The on-disk grammar is a strict subset of the common line-oriented RDF
serialization: absolute IRIs in angle brackets, plain or language-tagged
literals in object position only, one triple per line with a terminal
period, ``#`` comment lines, no prefixes, no blank nodes (EBNF in
docs/formats.md). Reasoning is reduced to what conversation steering
needs: class membership, subClassOf edges, and sibling-by-shared-class
proximity.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .model import ParseError

# Fixed vocabulary (closed, documented set).
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
RDFS_SUBCLASSOF = "http://www.w3.org/2000/01/rdf-schema#subClassOf"
FOAF_PERSON = "http://xmlns.com/foaf/0.1/Person"
FOAF_NAME = "http://xmlns.com/foaf/0.1/name"
SCHEMA_MOVIE = "https://schema.org/Movie"
STARS_IN = "http://wolly.example.org/ontology#starsIn"

VOCABULARY = {
    "type": RDF_TYPE,
    "subClassOf": RDFS_SUBCLASSOF,
    "Person": FOAF_PERSON,
    "name": FOAF_NAME,
    "Movie": SCHEMA_MOVIE,
    "starsIn": STARS_IN,
}

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_LANG_RE = re.compile(r"^[A-Za-z]+(-[A-Za-z0-9]+)*$")


class UnknownEntity(KeyError):
    pass


@dataclass(frozen=True)
class Literal:
    text: str
    lang: Optional[str] = None


Object = Union[str, Literal]  # IRI string or literal


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: Object


def _check_iri(iri: str, what: str, line: int) -> str:
    if not _SCHEME_RE.match(iri):
        raise ParseError(f"{what} {iri!r} is not an absolute IRI", line=line)
    return iri


_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}


class _LineScanner:
    def __init__(self, text: str, line: int):
        self.text = text
        self.pos = 0
        self.line = line

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def fail(self, reason: str):
        raise ParseError(reason, line=self.line)

    def iri(self, what: str) -> str:
        if self.pos >= len(self.text) or self.text[self.pos] != "<":
            self.fail(f"expected <{what}-IRI>")
        end = self.text.find(">", self.pos + 1)
        if end == -1:
            self.fail(f"unterminated {what} IRI")
        iri = self.text[self.pos + 1:end]
        if not iri or any(c in iri for c in ' <>"'):
            self.fail(f"invalid characters in {what} IRI")
        self.pos = end + 1
        return _check_iri(iri, what, self.line)

    def literal(self) -> Literal:
        chars: list[str] = []
        i = self.pos + 1
        while True:
            if i >= len(self.text):
                self.fail("unterminated literal")
            c = self.text[i]
            if c == "\\":
                if i + 1 >= len(self.text) or self.text[i + 1] not in _ESCAPES:
                    self.fail(f"unsupported escape in literal")
                chars.append(_ESCAPES[self.text[i + 1]])
                i += 2
                continue
            if c == '"':
                break
            chars.append(c)
            i += 1
        self.pos = i + 1
        lang = None
        if self.pos < len(self.text) and self.text[self.pos] == "@":
            end = self.pos + 1
            while end < len(self.text) and self.text[end] not in " \t":
                end += 1
            lang = self.text[self.pos + 1:end]
            if not _LANG_RE.match(lang):
                self.fail(f"invalid language tag {lang!r}")
            self.pos = end
        return Literal("".join(chars), lang)


def parse_triple_line(raw: str, line: int) -> Triple:
    s = _LineScanner(raw, line)
    s.skip_ws()
    subject = s.iri("subject")
    s.skip_ws()
    predicate = s.iri("predicate")
    s.skip_ws()
    if s.pos < len(s.text) and s.text[s.pos] == '"':
        obj: Object = s.literal()
    else:
        obj = s.iri("object")
    s.skip_ws()
    if s.pos >= len(s.text) or s.text[s.pos] != ".":
        s.fail("missing terminal '.'")
    s.pos += 1
    s.skip_ws()
    if s.pos != len(s.text):
        s.fail("trailing content after terminal '.'")
    return Triple(subject, predicate, obj)


def parse_triples(text: str) -> list[Triple]:
    """Parse a whole document; raises on the first bad line."""
    triples = []
    for n, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        triples.append(parse_triple_line(raw.rstrip("\r\n"), n))
    return triples


class KnowledgeBase:
    """A triple set with subject/predicate/object indexes.

    Many concurrent readers are fine; loads take the writer lock and
    exclude readers for their (short) duration.
    """

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._triples: set[Triple] = set()
        self._by_subject: dict[str, set[Triple]] = {}
        self._by_predicate: dict[str, set[Triple]] = {}
        self._by_object: dict[Object, set[Triple]] = {}

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def triples(self) -> set[Triple]:
        with self._lock:
            return set(self._triples)

    def _add(self, triple: Triple) -> bool:
        if triple in self._triples:
            return False
        self._triples.add(triple)
        self._by_subject.setdefault(triple.subject, set()).add(triple)
        self._by_predicate.setdefault(triple.predicate, set()).add(triple)
        self._by_object.setdefault(triple.object, set()).add(triple)
        return True

    def add_triples(self, triples: Iterable[Triple]) -> int:
        with self._lock:
            return sum(1 for t in triples if self._add(t))

    def load_triples(self, text: str) -> int:
        """Parse and add a document; all-or-nothing on parse error.

        Returns the number of distinct triples actually added.
        """
        parsed = parse_triples(text)  # parse fully before touching state
        return self.add_triples(parsed)

    def match(self, subject: Optional[str] = None, predicate: Optional[str] = None,
              object: Optional[Object] = None) -> set[Triple]:
        """Index-backed pattern query; None is a wildcard."""
        with self._lock:
            candidate_sets = []
            if subject is not None:
                candidate_sets.append(self._by_subject.get(subject, set()))
            if predicate is not None:
                candidate_sets.append(self._by_predicate.get(predicate, set()))
            if object is not None:
                candidate_sets.append(self._by_object.get(object, set()))
            if not candidate_sets:
                return set(self._triples)
            result = min(candidate_sets, key=len)
            for other in candidate_sets:
                if other is not result:
                    result = result & other
            return set(result)

    # -- entity helpers -----------------------------------------------------

    def entities(self) -> set[str]:
        """IRIs appearing in subject or object position."""
        with self._lock:
            out = set(self._by_subject)
            out.update(o for o in self._by_object if isinstance(o, str))
            return out

    def has_entity(self, iri: str) -> bool:
        with self._lock:
            return iri in self._by_subject or iri in self._by_object

    def classes_of(self, entity: str) -> set[str]:
        return {t.object for t in self.match(subject=entity, predicate=RDF_TYPE)
                if isinstance(t.object, str)}

    def instances_of(self, cls: str) -> set[str]:
        return {t.subject for t in self.match(predicate=RDF_TYPE, object=cls)}

    def subjects_named(self, name: str) -> set[str]:
        """Entities whose name literal matches case-insensitively."""
        wanted = name.strip().lower()
        return {t.subject for t in self.match(predicate=FOAF_NAME)
                if isinstance(t.object, Literal) and t.object.text.lower() == wanted}

    def name_of(self, entity: str) -> Optional[str]:
        for t in self.match(subject=entity, predicate=FOAF_NAME):
            if isinstance(t.object, Literal):
                return t.object.text
        return None

    # -- query operations ----------------------------------------------------

    def characters_in(self, movie: str) -> set[str]:
        """All s with (s, starsIn, movie); empty if the movie is unknown."""
        return {t.subject for t in self.match(predicate=STARS_IN, object=movie)}

    def costars(self, character: str) -> set[str]:
        """Everyone sharing a movie with the character, excluding them."""
        out: set[str] = set()
        for t in self.match(subject=character, predicate=STARS_IN):
            if isinstance(t.object, str):
                out |= self.characters_in(t.object)
        out.discard(character)
        return out

    def _proximity_neighbors(self, entity: str) -> set[str]:
        # One hop of taxonomy proximity: entities sharing a direct class,
        # plus direct subClassOf / superClassOf neighbors.
        neighbors: set[str] = set()
        for cls in self.classes_of(entity):
            neighbors |= self.instances_of(cls)
        for t in self.match(subject=entity, predicate=RDFS_SUBCLASSOF):
            if isinstance(t.object, str):
                neighbors.add(t.object)
        for t in self.match(predicate=RDFS_SUBCLASSOF, object=entity):
            neighbors.add(t.subject)
        neighbors.discard(entity)
        return neighbors

    def related_topics(self, entity: str, k: int) -> list[str]:
        """Entities ranked by taxonomy proximity (BFS hops), then IRI.

        Raises UnknownEntity if the entity never occurs in the store and
        ValueError for non-positive k.
        """
        if k <= 0:
            raise ValueError("k must be positive")
        with self._lock:
            if not self.has_entity(entity):
                raise UnknownEntity(entity)
            distance = {entity: 0}
            frontier = [entity]
            ranked: list[tuple[int, str]] = []
            d = 0
            while frontier:
                d += 1
                next_frontier = []
                for node in frontier:
                    for neighbor in self._proximity_neighbors(node):
                        if neighbor not in distance:
                            distance[neighbor] = d
                            ranked.append((d, neighbor))
                            next_frontier.append(neighbor)
                frontier = next_frontier
            ranked.sort()
            return [iri for _, iri in ranked[:k]]

    def describe(self, entity: str) -> set[Triple]:
        """All triples with the entity in subject or object position."""
        with self._lock:
            out = set(self._by_subject.get(entity, set()))
            out |= self._by_object.get(entity, set())
            return out
