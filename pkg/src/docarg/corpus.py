"""Document data model, corpus ingestion, and span utilities.

Word indices are 1-based inclusive throughout the in-memory model, so a
document with ``n`` words spans ``[1, n]`` and a span ``[a, b]`` covers words
``a..b``. The JSONL wire format stores 0-based inclusive pairs; the loaders
and writers shift between the two conventions.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import CorpusFormatError, HeadResolutionError, SchemaError

logger = logging.getLogger(__name__)

NULL_ROLE = "<none>"


@dataclass(frozen=True, order=True)
class Span:
    """Inclusive 1-based word span ``[start, end]``."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 1 or self.end < self.start:
            raise CorpusFormatError(f"invalid span [{self.start}, {self.end}]")

    def __len__(self) -> int:
        return self.end - self.start + 1

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.start, self.end + 1))

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: "Span") -> bool:
        return self.start <= other.end and other.start <= self.end

    def to_wire(self) -> list[int]:
        return [self.start - 1, self.end - 1]

    @classmethod
    def from_wire(cls, pair: Sequence[int], what: str = "span") -> "Span":
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(x, int) for x in pair)
        ):
            raise CorpusFormatError(f"{what}: expected a [start, end] integer pair, got {pair!r}")
        return cls(pair[0] + 1, pair[1] + 1)


@dataclass(frozen=True)
class Argument:
    role: str
    span: Span


@dataclass(frozen=True)
class EventInstance:
    """One event: its type, trigger span, and gold (role, span) arguments."""

    event_type: str
    trigger: Span
    arguments: tuple[Argument, ...] = ()


@dataclass(frozen=True)
class AmrNode:
    """A concept node with an optional word-span alignment."""

    node_id: int
    span: Span | None


@dataclass(frozen=True)
class AmrEdge:
    src: int
    dst: int
    label: str


@dataclass(frozen=True)
class AmrSentenceGraph:
    """Rooted directed labeled graph over one sentence's concepts."""

    nodes: tuple[AmrNode, ...]
    edges: tuple[AmrEdge, ...]
    root: int

    def node_ids(self) -> set[int]:
        return {n.node_id for n in self.nodes}


@dataclass(frozen=True)
class Document:
    doc_id: str
    words: tuple[str, ...]
    sentence_bounds: tuple[tuple[int, int], ...]
    dep_parents: tuple[int, ...] | None = None
    coref_clusters: tuple[tuple[Span, ...], ...] | None = None
    amr: tuple[AmrSentenceGraph | None, ...] | None = None

    def __len__(self) -> int:
        return len(self.words)

    @property
    def num_sentences(self) -> int:
        return len(self.sentence_bounds)

    def word(self, i: int) -> str:
        self._check_index(i)
        return self.words[i - 1]

    def sentence_index(self, i: int) -> int:
        """1-based id of the sentence containing word ``i``."""
        self._check_index(i)
        for sid, (start, end) in enumerate(self.sentence_bounds, start=1):
            if start <= i <= end:
                return sid
        raise CorpusFormatError(f"{self.doc_id}: word {i} not covered by any sentence")

    def sentence_span(self, sid: int) -> Span:
        if not 1 <= sid <= self.num_sentences:
            raise CorpusFormatError(f"{self.doc_id}: sentence id {sid} out of range")
        start, end = self.sentence_bounds[sid - 1]
        return Span(start, end)

    def sentence_of_span(self, span: Span) -> int:
        """Sentence containing the whole span; errors if it crosses a boundary."""
        sid = self.sentence_index(span.start)
        if self.sentence_index(span.end) != sid:
            raise CorpusFormatError(
                f"{self.doc_id}: span [{span.start}, {span.end}] crosses a sentence boundary"
            )
        return sid

    def word_sentence_ids(self) -> list[int]:
        """Per-word sentence id, aligned with word order."""
        out = []
        for sid, (start, end) in enumerate(self.sentence_bounds, start=1):
            out.extend([sid] * (end - start + 1))
        return out

    def _check_index(self, i: int) -> None:
        if not 1 <= i <= len(self.words):
            raise CorpusFormatError(
                f"{self.doc_id}: word index {i} out of range [1, {len(self.words)}]"
            )

    def validate(self) -> None:
        """Check the structural invariants; raise CorpusFormatError on violation."""
        if not self.words:
            raise CorpusFormatError(f"{self.doc_id}: document has no words")
        expected_start = 1
        for start, end in self.sentence_bounds:
            if start != expected_start or end < start:
                raise CorpusFormatError(
                    f"{self.doc_id}: sentence_bounds must partition [1, {len(self.words)}]"
                    f" contiguously, got {list(self.sentence_bounds)}"
                )
            expected_start = end + 1
        if expected_start != len(self.words) + 1:
            raise CorpusFormatError(
                f"{self.doc_id}: sentence_bounds cover [1, {expected_start - 1}]"
                f" but the document has {len(self.words)} words"
            )
        if self.dep_parents is not None:
            self._validate_dep_trees()
        if self.coref_clusters is not None:
            for cluster in self.coref_clusters:
                for span in cluster:
                    self.sentence_of_span(span)
        if self.amr is not None:
            if len(self.amr) != self.num_sentences:
                raise CorpusFormatError(
                    f"{self.doc_id}: expected one AMR entry per sentence"
                    f" ({self.num_sentences}), got {len(self.amr)}"
                )
            for sid, graph in enumerate(self.amr, start=1):
                if graph is not None:
                    self._validate_amr(sid, graph)

    def _validate_dep_trees(self) -> None:
        parents = self.dep_parents
        assert parents is not None
        if len(parents) != len(self.words):
            raise CorpusFormatError(f"{self.doc_id}: dep_parents length mismatch")
        for start, end in self.sentence_bounds:
            roots = [i for i in range(start, end + 1) if parents[i - 1] == -1]
            if len(roots) != 1:
                raise CorpusFormatError(
                    f"{self.doc_id}: sentence [{start}, {end}] has {len(roots)} dependency"
                    " roots, expected exactly 1"
                )
            for i in range(start, end + 1):
                p = parents[i - 1]
                if p != -1 and not start <= p <= end:
                    raise CorpusFormatError(
                        f"{self.doc_id}: word {i} has parent {p} outside its sentence"
                    )
            # acyclic iff every word reaches the root within sentence length hops
            for i in range(start, end + 1):
                if self._depth_in_tree(i, limit=end - start + 1) is None:
                    raise CorpusFormatError(
                        f"{self.doc_id}: dependency cycle through word {i}"
                    )

    def _depth_in_tree(self, i: int, limit: int) -> int | None:
        parents = self.dep_parents
        assert parents is not None
        depth = 0
        node = i
        while parents[node - 1] != -1:
            node = parents[node - 1]
            depth += 1
            if depth > limit:
                return None
        return depth

    def _validate_amr(self, sid: int, graph: AmrSentenceGraph) -> None:
        ids = [n.node_id for n in graph.nodes]
        if len(ids) != len(set(ids)):
            raise CorpusFormatError(f"{self.doc_id}: sentence {sid} AMR has duplicate node ids")
        if graph.root not in set(ids):
            raise CorpusFormatError(
                f"{self.doc_id}: sentence {sid} AMR root {graph.root} is not a member node"
            )
        bounds = self.sentence_span(sid)
        for node in graph.nodes:
            if node.span is not None and not bounds.contains(node.span):
                raise CorpusFormatError(
                    f"{self.doc_id}: sentence {sid} AMR node {node.node_id} aligned to"
                    f" [{node.span.start}, {node.span.end}] outside sentence bounds"
                    f" [{bounds.start}, {bounds.end}]"
                )
        id_set = set(ids)
        for edge in graph.edges:
            if edge.src not in id_set or edge.dst not in id_set:
                raise CorpusFormatError(
                    f"{self.doc_id}: sentence {sid} AMR edge"
                    f" ({edge.src}, {edge.dst}) references a missing node"
                )


@dataclass(frozen=True)
class SpanCandidate:
    """A candidate argument span; never crosses a sentence boundary."""

    start: int
    end: int
    sentence_index: int

    @property
    def span(self) -> Span:
        return Span(self.start, self.end)

    def __len__(self) -> int:
        return self.end - self.start + 1


@dataclass
class Schema:
    """Event-type and role inventories plus per-type legal roles."""

    event_types: dict[str, int]
    roles: dict[str, int]
    legal_roles: dict[str, frozenset[str]]

    def __post_init__(self) -> None:
        if self.roles.get(NULL_ROLE) != 0:
            raise SchemaError(f"role inventory must assign id 0 to {NULL_ROLE!r}")
        for name, legal in self.legal_roles.items():
            if name not in self.event_types:
                raise SchemaError(f"legal_roles references unknown event type {name!r}")
            if NULL_ROLE in legal:
                raise SchemaError(f"{NULL_ROLE!r} may not be a legal role of {name!r}")
        for ids, what in ((self.event_types, "event type"), (self.roles, "role")):
            if sorted(ids.values()) != list(range(len(ids))):
                raise SchemaError(f"{what} ids must be dense from 0")

    @property
    def num_roles(self) -> int:
        return len(self.roles)

    @property
    def num_event_types(self) -> int:
        return len(self.event_types)

    def role_id(self, role: str) -> int:
        if role not in self.roles:
            raise SchemaError(f"unknown role {role!r}")
        return self.roles[role]

    def role_name(self, role_id: int) -> str:
        for name, rid in self.roles.items():
            if rid == role_id:
                return name
        raise SchemaError(f"unknown role id {role_id}")

    def event_type_id(self, event_type: str) -> int:
        if event_type not in self.event_types:
            raise SchemaError(f"unknown event type {event_type!r}")
        return self.event_types[event_type]

    def legal_role_ids(self, event_type: str) -> frozenset[int]:
        return frozenset(self.roles[r] for r in self.legal_roles[event_type])

    @classmethod
    def from_corpus(cls, corpus: Iterable[tuple[Document, Sequence[EventInstance]]]) -> "Schema":
        """Infer the schema from the event annotations of a corpus."""
        types: dict[str, set[str]] = {}
        for _, events in corpus:
            for event in events:
                legal = types.setdefault(event.event_type, set())
                legal.update(arg.role for arg in event.arguments)
        event_types = {name: i for i, name in enumerate(sorted(types))}
        role_names = sorted({r for legal in types.values() for r in legal})
        roles = {NULL_ROLE: 0}
        roles.update({name: i + 1 for i, name in enumerate(role_names)})
        legal_roles = {name: frozenset(types[name]) for name in types}
        return cls(event_types=event_types, roles=roles, legal_roles=legal_roles)

    def to_dict(self) -> dict:
        return {
            "event_types": dict(self.event_types),
            "roles": dict(self.roles),
            "legal_roles": {k: sorted(v) for k, v in self.legal_roles.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        return cls(
            event_types=dict(d["event_types"]),
            roles=dict(d["roles"]),
            legal_roles={k: frozenset(v) for k, v in d["legal_roles"].items()},
        )


def sentence_index(doc: Document, i: int) -> int:
    """Sentence id (1-based) of word ``i``; errors when ``i`` is out of range."""
    return doc.sentence_index(i)


def enumerate_candidates(doc: Document, max_span_len: int) -> list[SpanCandidate]:
    """All intra-sentential spans of length <= max_span_len, in (start, end) order."""
    if max_span_len < 1:
        raise ValueError(f"max_span_len must be >= 1, got {max_span_len}")
    out = []
    for sid, (start, end) in enumerate(doc.sentence_bounds, start=1):
        for a in range(start, end + 1):
            for b in range(a, min(a + max_span_len - 1, end) + 1):
                out.append(SpanCandidate(a, b, sid))
    out.sort(key=lambda c: (c.start, c.end))
    return out


def word_depth(doc: Document, i: int) -> int:
    """Number of parent hops from word ``i`` to its sentence root."""
    if doc.dep_parents is None:
        raise HeadResolutionError(
            f"{doc.doc_id}: no dependency parses; supply dep_parents or enable the"
            " span-end fallback"
        )
    doc._check_index(i)
    depth = doc._depth_in_tree(i, limit=len(doc))
    if depth is None:
        raise CorpusFormatError(f"{doc.doc_id}: dependency cycle through word {i}")
    return depth


def span_head(doc: Document, span: Span, fallback_to_span_end: bool = False) -> int:
    """Head word of a span: minimum hops to the sentence root, ties to the left.

    Without dependency parses, raises HeadResolutionError unless
    ``fallback_to_span_end`` is set, in which case the span's last word is used.
    """
    doc.sentence_of_span(span)
    if doc.dep_parents is None:
        if fallback_to_span_end:
            return span.end
        raise HeadResolutionError(
            f"{doc.doc_id}: no dependency parses; supply dep_parents or enable the"
            " span-end fallback"
        )
    best = min(range(span.start, span.end + 1), key=lambda i: (word_depth(doc, i), i))
    return best


# ---------------------------------------------------------------------------
# Windowing support: restrict a document to a subset of its sentences.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DocumentWindow:
    """A contiguous-by-renumbering view of selected sentences of a document."""

    original: Document
    document: Document
    kept_sentences: tuple[int, ...]
    new_to_old: dict[int, int] = field(repr=False)
    old_to_new: dict[int, int] = field(repr=False)

    def map_span_to_window(self, span: Span) -> Span | None:
        if span.start not in self.old_to_new or span.end not in self.old_to_new:
            return None
        return Span(self.old_to_new[span.start], self.old_to_new[span.end])

    def map_span_from_window(self, span: Span) -> Span:
        return Span(self.new_to_old[span.start], self.new_to_old[span.end])

    def map_event_to_window(self, event: EventInstance) -> EventInstance:
        """Remap an event; arguments falling outside the window are dropped."""
        trigger = self.map_span_to_window(event.trigger)
        if trigger is None:
            raise CorpusFormatError(
                f"{self.original.doc_id}: trigger [{event.trigger.start},"
                f" {event.trigger.end}] lies outside the window"
            )
        kept = []
        for arg in event.arguments:
            mapped = self.map_span_to_window(arg.span)
            if mapped is not None:
                kept.append(Argument(arg.role, mapped))
        return EventInstance(event.event_type, trigger, tuple(kept))


def window_document(doc: Document, sentence_ids: Sequence[int]) -> DocumentWindow:
    """Build the sub-document consisting of the given sentences (sorted, deduped)."""
    kept = tuple(sorted(set(sentence_ids)))
    if not kept:
        raise CorpusFormatError(f"{doc.doc_id}: window must keep at least one sentence")
    for sid in kept:
        if not 1 <= sid <= doc.num_sentences:
            raise CorpusFormatError(f"{doc.doc_id}: window sentence id {sid} out of range")
    old_to_new: dict[int, int] = {}
    new_to_old: dict[int, int] = {}
    words: list[str] = []
    bounds: list[tuple[int, int]] = []
    for sid in kept:
        start, end = doc.sentence_bounds[sid - 1]
        new_start = len(words) + 1
        for i in range(start, end + 1):
            new_i = len(words) + 1
            old_to_new[i] = new_i
            new_to_old[new_i] = i
            words.append(doc.words[i - 1])
        bounds.append((new_start, len(words)))

    def remap_span(span: Span) -> Span:
        return Span(old_to_new[span.start], old_to_new[span.end])

    dep = None
    if doc.dep_parents is not None:
        dep = tuple(
            -1 if doc.dep_parents[new_to_old[i] - 1] == -1
            else old_to_new[doc.dep_parents[new_to_old[i] - 1]]
            for i in range(1, len(words) + 1)
        )
    coref = None
    if doc.coref_clusters is not None:
        clusters = []
        for cluster in doc.coref_clusters:
            spans = tuple(
                remap_span(s)
                for s in cluster
                if s.start in old_to_new and s.end in old_to_new
            )
            if spans:
                clusters.append(spans)
        coref = tuple(clusters)
    amr = None
    if doc.amr is not None:
        graphs: list[AmrSentenceGraph | None] = []
        for sid in kept:
            graph = doc.amr[sid - 1]
            if graph is None:
                graphs.append(None)
            else:
                graphs.append(
                    AmrSentenceGraph(
                        nodes=tuple(
                            AmrNode(n.node_id, remap_span(n.span) if n.span is not None else None)
                            for n in graph.nodes
                        ),
                        edges=graph.edges,
                        root=graph.root,
                    )
                )
        amr = tuple(graphs)
    sub = Document(
        doc_id=doc.doc_id,
        words=tuple(words),
        sentence_bounds=tuple(bounds),
        dep_parents=dep,
        coref_clusters=coref,
        amr=amr,
    )
    sub.validate()
    return DocumentWindow(
        original=doc,
        document=sub,
        kept_sentences=kept,
        new_to_old=new_to_old,
        old_to_new=old_to_new,
    )


# ---------------------------------------------------------------------------
# Normalized JSONL wire format.
# ---------------------------------------------------------------------------


def _amr_graph_to_json(graph: AmrSentenceGraph | None) -> dict | None:
    if graph is None:
        return None
    return {
        "nodes": [
            {"id": n.node_id, "span": n.span.to_wire() if n.span is not None else None}
            for n in graph.nodes
        ],
        "edges": [{"src": e.src, "dst": e.dst, "label": e.label} for e in graph.edges],
        "root": graph.root,
    }


def _amr_graph_from_json(obj: dict | None, doc_id: str, sid: int) -> AmrSentenceGraph | None:
    if obj is None:
        return None
    where = f"{doc_id}: sentence {sid} amr"
    try:
        nodes = tuple(
            AmrNode(
                node_id=int(n["id"]),
                span=Span.from_wire(n["span"], where) if n.get("span") is not None else None,
            )
            for n in obj["nodes"]
        )
        edges = tuple(
            AmrEdge(src=int(e["src"]), dst=int(e["dst"]), label=str(e["label"]))
            for e in obj["edges"]
        )
        root = int(obj["root"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusFormatError(f"{where}: malformed graph ({exc})") from exc
    return AmrSentenceGraph(nodes=nodes, edges=edges, root=root)


def document_to_json(doc: Document, events: Sequence[EventInstance]) -> dict:
    return {
        "doc_id": doc.doc_id,
        "words": list(doc.words),
        "sentence_bounds": [[s - 1, e - 1] for s, e in doc.sentence_bounds],
        "dep_parents": (
            None
            if doc.dep_parents is None
            else [p - 1 if p != -1 else -1 for p in doc.dep_parents]
        ),
        "coref_clusters": (
            None
            if doc.coref_clusters is None
            else [[s.to_wire() for s in cluster] for cluster in doc.coref_clusters]
        ),
        "events": [
            {
                "event_type": ev.event_type,
                "trigger": ev.trigger.to_wire(),
                "arguments": [
                    {"role": a.role, "span": a.span.to_wire()} for a in ev.arguments
                ],
            }
            for ev in events
        ],
        "amr": (
            None if doc.amr is None else [_amr_graph_to_json(g) for g in doc.amr]
        ),
    }


def document_from_json(obj: dict) -> tuple[Document, list[EventInstance]]:
    doc_id = obj.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusFormatError(f"record missing a string doc_id: {obj.get('doc_id')!r}")
    try:
        words = tuple(str(w) for w in obj["words"])
        bounds = tuple(
            (int(s) + 1, int(e) + 1) for s, e in obj["sentence_bounds"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusFormatError(f"{doc_id}: malformed words/sentence_bounds ({exc})") from exc
    dep = obj.get("dep_parents")
    dep_parents = None
    if dep is not None:
        if len(dep) != len(words):
            raise CorpusFormatError(f"{doc_id}: dep_parents length mismatch")
        dep_parents = tuple(int(p) + 1 if int(p) != -1 else -1 for p in dep)
    coref = obj.get("coref_clusters")
    coref_clusters = None
    if coref is not None:
        coref_clusters = tuple(
            tuple(Span.from_wire(s, f"{doc_id}: coref span") for s in cluster)
            for cluster in coref
        )
    amr_obj = obj.get("amr")
    amr = None
    if amr_obj is not None:
        amr = tuple(
            _amr_graph_from_json(g, doc_id, sid)
            for sid, g in enumerate(amr_obj, start=1)
        )
    doc = Document(
        doc_id=doc_id,
        words=words,
        sentence_bounds=bounds,
        dep_parents=dep_parents,
        coref_clusters=coref_clusters,
        amr=amr,
    )
    doc.validate()
    events = []
    for k, ev in enumerate(obj.get("events", [])):
        try:
            event_type = str(ev["event_type"])
            trigger = Span.from_wire(ev["trigger"], f"{doc_id}: event {k} trigger")
            args = tuple(
                Argument(
                    role=str(a["role"]),
                    span=Span.from_wire(a["span"], f"{doc_id}: event {k} argument"),
                )
                for a in ev.get("arguments", [])
            )
        except (KeyError, TypeError) as exc:
            raise CorpusFormatError(f"{doc_id}: malformed event {k} ({exc})") from exc
        events.append(EventInstance(event_type, trigger, args))
    _validate_events(doc, events)
    return doc, events


def _validate_events(doc: Document, events: Sequence[EventInstance]) -> None:
    for k, ev in enumerate(events):
        try:
            doc.sentence_of_span(ev.trigger)
        except CorpusFormatError as exc:
            raise CorpusFormatError(f"{doc.doc_id}: event {k} trigger invalid: {exc}") from exc
        for arg in ev.arguments:
            if arg.span.end > len(doc):
                raise CorpusFormatError(
                    f"{doc.doc_id}: event {k} argument span"
                    f" [{arg.span.start}, {arg.span.end}] outside document"
                )
            doc.sentence_of_span(arg.span)


# ---------------------------------------------------------------------------
# Dataset adapters.
# ---------------------------------------------------------------------------

_RAMS_ROLE_PREFIX = re.compile(r"^evt\d+arg\d+")


def _rams_role_name(raw: str) -> str:
    """Strip the positional ``evtNNNargNN`` prefix from a native role string."""
    return _RAMS_ROLE_PREFIX.sub("", raw) or raw


def _document_from_rams(obj: dict) -> tuple[Document, list[EventInstance]]:
    doc_id = obj.get("doc_key")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusFormatError(f"RAMS record missing doc_key: {obj.get('doc_key')!r}")
    sentences = obj.get("sentences")
    if not isinstance(sentences, list) or not sentences:
        raise CorpusFormatError(f"{doc_id}: RAMS record missing sentences")
    words: list[str] = []
    bounds: list[tuple[int, int]] = []
    for sent in sentences:
        start = len(words) + 1
        words.extend(str(w) for w in sent)
        bounds.append((start, len(words)))
    doc = Document(doc_id=doc_id, words=tuple(words), sentence_bounds=tuple(bounds))
    doc.validate()

    triggers = obj.get("evt_triggers") or []
    links = obj.get("gold_evt_links") or []
    events = []
    for trig in triggers:
        try:
            t_start, t_end = int(trig[0]) + 1, int(trig[1]) + 1
            event_type = str(trig[2][0][0])
        except (IndexError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"{doc_id}: malformed evt_triggers entry ({exc})") from exc
        trigger = Span(t_start, t_end)
        args = []
        for link in links:
            try:
                link_trigger = Span(int(link[0][0]) + 1, int(link[0][1]) + 1)
                span = Span(int(link[1][0]) + 1, int(link[1][1]) + 1)
                role = _rams_role_name(str(link[2]))
            except (IndexError, TypeError, ValueError) as exc:
                raise CorpusFormatError(
                    f"{doc_id}: malformed gold_evt_links entry ({exc})"
                ) from exc
            if link_trigger == trigger:
                args.append(Argument(role, span))
        events.append(EventInstance(event_type, trigger, tuple(args)))
    _validate_events(doc, events)
    return doc, events


def _wikievents_sentence_lengths(obj: dict, doc_id: str, n_words: int) -> list[int]:
    sentences = obj.get("sentences")
    if not isinstance(sentences, list) or not sentences:
        raise CorpusFormatError(f"{doc_id}: WikiEvents record missing sentences")
    lengths = []
    for sent in sentences:
        # native layout: [token_list, sentence_text]; token entries may be
        # strings or [token, start_char] pairs depending on export version
        tokens = sent[0] if isinstance(sent, list) and len(sent) == 2 and isinstance(sent[0], list) else sent
        if not isinstance(tokens, list):
            raise CorpusFormatError(f"{doc_id}: unrecognized WikiEvents sentence layout")
        lengths.append(len(tokens))
    if sum(lengths) != n_words:
        raise CorpusFormatError(
            f"{doc_id}: WikiEvents sentences cover {sum(lengths)} tokens,"
            f" document has {n_words}"
        )
    return lengths


def _document_from_wikievents(
    obj: dict, coref_clusters_by_doc: dict[str, list[list[str]]] | None
) -> tuple[Document, list[EventInstance]]:
    doc_id = obj.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusFormatError(f"WikiEvents record missing doc_id: {obj.get('doc_id')!r}")
    tokens = obj.get("tokens")
    if not isinstance(tokens, list) or not tokens:
        raise CorpusFormatError(f"{doc_id}: WikiEvents record missing tokens")
    words = tuple(str(w) for w in tokens)
    lengths = _wikievents_sentence_lengths(obj, doc_id, len(words))
    bounds = []
    pos = 1
    for n in lengths:
        bounds.append((pos, pos + n - 1))
        pos += n

    # entity mention offsets are 0-based with exclusive end
    entity_spans: dict[str, Span] = {}
    for ent in obj.get("entity_mentions", []):
        try:
            entity_spans[str(ent["id"])] = Span(int(ent["start"]) + 1, int(ent["end"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"{doc_id}: malformed entity mention ({exc})") from exc

    coref = None
    if coref_clusters_by_doc is not None:
        clusters = []
        for cluster in coref_clusters_by_doc.get(doc_id, []):
            spans = tuple(entity_spans[e] for e in cluster if e in entity_spans)
            if spans:
                clusters.append(spans)
        coref = tuple(clusters)

    doc = Document(
        doc_id=doc_id,
        words=words,
        sentence_bounds=tuple(bounds),
        coref_clusters=coref,
    )
    doc.validate()

    events = []
    for k, ev in enumerate(obj.get("event_mentions", [])):
        try:
            trig = ev["trigger"]
            trigger = Span(int(trig["start"]) + 1, int(trig["end"]))
            event_type = str(ev["event_type"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"{doc_id}: malformed event mention {k} ({exc})") from exc
        args = []
        for arg in ev.get("arguments", []):
            entity_id = str(arg.get("entity_id"))
            role = str(arg.get("role"))
            if entity_id not in entity_spans:
                raise CorpusFormatError(
                    f"{doc_id}: event {k} argument references unknown entity {entity_id!r}"
                )
            args.append(Argument(role, entity_spans[entity_id]))
        events.append(EventInstance(event_type, trigger, tuple(args)))
    _validate_events(doc, events)
    return doc, events


def _load_wikievents_coref(path: str | Path) -> dict[str, list[list[str]]]:
    out: dict[str, list[list[str]]] = {}
    for obj in _iter_jsonl(path):
        key = obj.get("doc_key") or obj.get("doc_id")
        if not isinstance(key, str):
            raise CorpusFormatError(f"coref record missing doc_key: {obj!r}")
        out[key] = [list(map(str, cluster)) for cluster in obj.get("clusters", [])]
    return out


def _iter_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError(f"{path}:{lineno}: expected a JSON object")
            yield obj


Corpus = list[tuple[Document, list[EventInstance]]]

FORMATS = ("normalized", "rams", "wikievents")


def load_corpus(
    path: str | Path,
    format: str = "normalized",
    coref_path: str | Path | None = None,
    schema: Schema | None = None,
    max_span_len: int | None = None,
) -> Corpus:
    """Load a corpus file into validated documents with document-level offsets.

    ``schema``, when given, turns unknown event types or roles into errors.
    ``max_span_len``, when given, warns about gold arguments that exceed it
    (they stay in the gold sets and count against recall).
    """
    if format not in FORMATS:
        raise CorpusFormatError(f"unknown corpus format {format!r}; expected one of {FORMATS}")
    if not Path(path).exists():
        raise CorpusFormatError(f"corpus file not found: {path}")
    coref = None
    if format == "wikievents" and coref_path is not None:
        coref = _load_wikievents_coref(coref_path)
    corpus: Corpus = []
    for obj in _iter_jsonl(path):
        if format == "normalized":
            corpus.append(document_from_json(obj))
        elif format == "rams":
            corpus.append(_document_from_rams(obj))
        else:
            corpus.append(_document_from_wikievents(obj, coref))
    corpus.sort(key=lambda pair: pair[0].doc_id)
    seen: set[str] = set()
    for doc, _ in corpus:
        if doc.doc_id in seen:
            raise CorpusFormatError(f"duplicate doc_id {doc.doc_id!r} in {path}")
        seen.add(doc.doc_id)
    if schema is not None:
        check_schema(corpus, schema)
    if max_span_len is not None:
        oversized = count_oversized_arguments(corpus, max_span_len)
        if oversized:
            logger.warning(
                "%s: %d gold argument(s) longer than max_span_len=%d; they remain in"
                " the gold sets and count against recall",
                path,
                oversized,
                max_span_len,
            )
    return corpus


def save_corpus(path: str | Path, corpus: Corpus) -> None:
    """Write a corpus in the normalized JSONL format (one document per line)."""
    with open(path, "w", encoding="utf-8") as f:
        for doc, events in corpus:
            f.write(json.dumps(document_to_json(doc, events)) + "\n")


def check_schema(corpus: Corpus, schema: Schema) -> None:
    """Raise SchemaError listing every unknown event type or role in the corpus."""
    unknown_types: set[str] = set()
    unknown_roles: set[str] = set()
    for doc, events in corpus:
        for ev in events:
            if ev.event_type not in schema.event_types:
                unknown_types.add(ev.event_type)
            for arg in ev.arguments:
                if arg.role not in schema.roles:
                    unknown_roles.add(arg.role)
    if unknown_types or unknown_roles:
        parts = []
        if unknown_types:
            parts.append(f"unknown event types: {sorted(unknown_types)}")
        if unknown_roles:
            parts.append(f"unknown roles: {sorted(unknown_roles)}")
        raise SchemaError("; ".join(parts))


def count_oversized_arguments(corpus: Corpus, max_span_len: int) -> int:
    return sum(
        1
        for _, events in corpus
        for ev in events
        for arg in ev.arguments
        if len(arg.span) > max_span_len
    )


def count_events(corpus: Corpus) -> int:
    return sum(len(events) for _, events in corpus)


def count_arguments(corpus: Corpus) -> int:
    return sum(len(ev.arguments) for _, events in corpus for ev in events)
