"""Relation-label clustering and interaction-graph construction.

Pre-parsed per-sentence semantic graphs (produced by an external parser and
attached to documents at ingestion) are turned into the two graph views used
by the interaction module: a local view where sentences stay isolated, and a
global view that additionally links all sentence roots pairwise.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import IntEnum
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import (
    AmrEdge,
    AmrNode,
    AmrSentenceGraph,
    Corpus,
    Document,
    EventInstance,
    Span,
    _amr_graph_from_json,
    _iter_jsonl,
)
from .errors import CorpusFormatError, GraphError


class RelationCategory(IntEnum):
    """Clustered edge-label categories indexing the graph-convolution weights.

    ROOT_LINK is reserved for the synthetic root-to-root connections of the
    global graph and is never produced by label clustering.
    """

    SPATIAL = 0
    TEMPORAL = 1
    MEANS = 2
    MODIFIERS = 3
    OPERATORS = 4
    PREPOSITIONS = 5
    SENTENCE = 6
    ARG0 = 7
    ARG1 = 8
    ARG2 = 9
    ARG3 = 10
    ARG4 = 11
    OTHERS = 12
    ROOT_LINK = 13


NUM_LOCAL_CATEGORIES = 13
NUM_CATEGORIES = 14

_LABEL_TABLE = {
    "location": RelationCategory.SPATIAL,
    "destination": RelationCategory.SPATIAL,
    "path": RelationCategory.SPATIAL,
    "year": RelationCategory.TEMPORAL,
    "time": RelationCategory.TEMPORAL,
    "duration": RelationCategory.TEMPORAL,
    "decade": RelationCategory.TEMPORAL,
    "weekday": RelationCategory.TEMPORAL,
    "instrument": RelationCategory.MEANS,
    "manner": RelationCategory.MEANS,
    "topic": RelationCategory.MEANS,
    "medium": RelationCategory.MEANS,
    "mod": RelationCategory.MODIFIERS,
    "poss": RelationCategory.MODIFIERS,
    "arg0": RelationCategory.ARG0,
    "arg1": RelationCategory.ARG1,
    "arg2": RelationCategory.ARG2,
    "arg3": RelationCategory.ARG3,
    "arg4": RelationCategory.ARG4,
}

_OP_PATTERN = re.compile(r"^op-?\d*$")
_PREP_PATTERN = re.compile(r"^prep-")
_SNT_PATTERN = re.compile(r"^snt\d*$")


def cluster_relation(raw_label: str) -> RelationCategory:
    """Map a raw edge label to its category; total and deterministic.

    Matching is case-insensitive with a leading ":" stripped. ``op1``,
    ``op2``, ... fall into OPERATORS, ``prep-*`` into PREPOSITIONS, the
    ``snt`` family into SENTENCE, and anything unrecognized into OTHERS.
    """
    label = raw_label.lstrip(":").lower()
    if label in _LABEL_TABLE:
        return _LABEL_TABLE[label]
    if _OP_PATTERN.match(label):
        return RelationCategory.OPERATORS
    if _PREP_PATTERN.match(label):
        return RelationCategory.PREPOSITIONS
    if _SNT_PATTERN.match(label):
        return RelationCategory.SENTENCE
    return RelationCategory.OTHERS


@dataclass(frozen=True)
class GraphNode:
    """A node of an interaction graph, renumbered densely over the document."""

    index: int
    span: Span | None
    sentence: int


class InteractionGraph:
    """Typed undirected adjacency over the concept nodes of one document.

    Every directed input edge is stored bidirectionally under its clustered
    category, so the neighborhoods used by message passing are symmetric.
    """

    def __init__(
        self,
        nodes: Sequence[GraphNode],
        neighbors: Sequence[dict[RelationCategory, frozenset[int]]],
        roots: Sequence[int],
        num_categories: int = NUM_CATEGORIES,
    ) -> None:
        if len(nodes) != len(neighbors):
            raise GraphError("one neighbor map required per node")
        for u, nmap in enumerate(neighbors):
            for k, members in nmap.items():
                if u in members:
                    raise GraphError(f"node {u} lists itself as a category-{int(k)} neighbor")
        self.nodes = tuple(nodes)
        self.neighbors = tuple(dict(n) for n in neighbors)
        self.roots = tuple(roots)
        self.num_categories = num_categories
        self._pair_cache: dict[RelationCategory, tuple[tuple[int, ...], tuple[int, ...]]] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def neighbor_set(self, u: int, k: RelationCategory) -> frozenset[int]:
        return self.neighbors[u].get(k, frozenset())

    def category_pairs(self, k: RelationCategory) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """(targets, sources) index lists for all category-k adjacency entries."""
        if k not in self._pair_cache:
            rows: list[int] = []
            cols: list[int] = []
            for u in range(len(self.nodes)):
                for v in sorted(self.neighbor_set(u, k)):
                    rows.append(u)
                    cols.append(v)
            self._pair_cache[k] = (tuple(rows), tuple(cols))
        return self._pair_cache[k]

    def edge_count(self, k: RelationCategory | None = None) -> int:
        cats = [k] if k is not None else list(RelationCategory)
        return sum(len(self.category_pairs(c)[0]) for c in cats)

    def alignment_spans(self) -> list[Span | None]:
        return [n.span for n in self.nodes]


def _collect_sentence_graphs(doc: Document) -> list[tuple[int, AmrSentenceGraph]]:
    if doc.amr is None:
        raise GraphError(
            f"{doc.doc_id}: document has no semantic graphs; run prepare-amr first"
        )
    out = []
    for sid, graph in enumerate(doc.amr, start=1):
        if graph is not None and graph.nodes:
            out.append((sid, graph))
    return out


def build_local_graph(doc: Document) -> InteractionGraph:
    """Union of the per-sentence graphs; sentences stay isolated from each other."""
    nodes: list[GraphNode] = []
    neighbors: list[dict[RelationCategory, set[int]]] = []
    roots: list[int] = []
    for sid, graph in _collect_sentence_graphs(doc):
        sent_bounds = doc.sentence_span(sid)
        local_index: dict[int, int] = {}
        for node in graph.nodes:
            if node.span is not None and not sent_bounds.contains(node.span):
                raise GraphError(
                    f"{doc.doc_id}: sentence {sid} node {node.node_id} alignment"
                    f" [{node.span.start}, {node.span.end}] escapes its sentence"
                    f" [{sent_bounds.start}, {sent_bounds.end}]"
                )
            idx = len(nodes)
            local_index[node.node_id] = idx
            nodes.append(GraphNode(index=idx, span=node.span, sentence=sid))
            neighbors.append({})
        roots.append(local_index[graph.root])
        for edge in graph.edges:
            if edge.src not in local_index or edge.dst not in local_index:
                raise GraphError(
                    f"{doc.doc_id}: sentence {sid} edge ({edge.src}, {edge.dst})"
                    " references a missing node"
                )
            k = cluster_relation(edge.label)
            u, v = local_index[edge.src], local_index[edge.dst]
            if u == v:
                # a node always participates in its own aggregation; a literal
                # self-edge would otherwise double-count it
                continue
            neighbors[u].setdefault(k, set()).add(v)
            neighbors[v].setdefault(k, set()).add(u)
    return InteractionGraph(
        nodes=nodes,
        neighbors=[{k: frozenset(v) for k, v in n.items()} for n in neighbors],
        roots=roots,
        num_categories=NUM_CATEGORIES,
    )


def build_global_graph(doc: Document) -> InteractionGraph:
    """Local graph plus ROOT_LINK edges between every pair of sentence roots."""
    local = build_local_graph(doc)
    neighbors = [{k: set(v) for k, v in n.items()} for n in local.neighbors]
    for u, v in combinations(local.roots, 2):
        neighbors[u].setdefault(RelationCategory.ROOT_LINK, set()).add(v)
        neighbors[v].setdefault(RelationCategory.ROOT_LINK, set()).add(u)
    return InteractionGraph(
        nodes=local.nodes,
        neighbors=[{k: frozenset(v) for k, v in n.items()} for n in neighbors],
        roots=local.roots,
        num_categories=NUM_CATEGORIES,
    )


def argument_coverage(corpus: Corpus) -> float:
    """Fraction of gold argument spans overlapping at least one node alignment."""
    total = 0
    covered = 0
    for doc, events in corpus:
        spans: list[Span] = []
        if doc.amr is not None:
            for graph in doc.amr:
                if graph is None:
                    continue
                spans.extend(n.span for n in graph.nodes if n.span is not None)
        for ev in events:
            for arg in ev.arguments:
                total += 1
                if any(arg.span.overlaps(s) for s in spans):
                    covered += 1
    return covered / total if total else 0.0


# ---------------------------------------------------------------------------
# Merging external parser output into corpus records.
# ---------------------------------------------------------------------------


def load_parser_output(path: str | Path) -> dict[tuple[str, int], AmrSentenceGraph | None]:
    """Read per-sentence graphs from an external parser's output.

    Accepts either a JSONL file of ``{"doc_id", "sentence_index", "nodes",
    "edges", "root"}`` records (0-based sentence_index, 0-based alignment
    spans) or a directory of ``<doc_id>.json`` files each holding
    ``{"graphs": [graph-or-null, ...]}``.
    """
    path = Path(path)
    graphs: dict[tuple[str, int], AmrSentenceGraph | None] = {}
    if path.is_dir():
        for file in sorted(path.glob("*.json")):
            with open(file, "r", encoding="utf-8") as f:
                obj = json.load(f)
            doc_id = obj.get("doc_id", file.stem)
            for i, g in enumerate(obj.get("graphs", [])):
                graphs[(doc_id, i)] = _amr_graph_from_json(g, doc_id, i + 1)
        return graphs
    for obj in _iter_jsonl(path):
        doc_id = obj.get("doc_id")
        sent = obj.get("sentence_index")
        if not isinstance(doc_id, str) or not isinstance(sent, int):
            raise CorpusFormatError(
                f"{path}: parser record needs string doc_id and integer"
                f" sentence_index, got {obj!r}"
            )
        graph_obj = {k: obj[k] for k in ("nodes", "edges", "root") if k in obj}
        if len(graph_obj) == 3:
            graphs[(doc_id, sent)] = _amr_graph_from_json(graph_obj, doc_id, sent + 1)
        else:
            graphs[(doc_id, sent)] = None
    return graphs


def attach_parses(
    corpus: Corpus, graphs: dict[tuple[str, int], AmrSentenceGraph | None]
) -> Corpus:
    """Attach parser graphs to documents, shifting alignments to document level.

    Parser output alignments are sentence-local (offset 0 is the sentence's
    first word); they become document-level spans here.
    """
    merged: Corpus = []
    for doc, events in corpus:
        per_sentence: list[AmrSentenceGraph | None] = []
        for sid in range(1, doc.num_sentences + 1):
            graph = graphs.get((doc.doc_id, sid - 1))
            if graph is None:
                per_sentence.append(None)
                continue
            bounds = doc.sentence_span(sid)
            nodes = []
            for node in graph.nodes:
                span = node.span
                if span is not None:
                    shifted = Span(span.start + bounds.start - 1, span.end + bounds.start - 1)
                    if not bounds.contains(shifted):
                        raise GraphError(
                            f"{doc.doc_id}: sentence {sid} node {node.node_id} alignment"
                            f" [{span.start - 1}, {span.end - 1}] does not fit the sentence"
                        )
                    span = shifted
                nodes.append(AmrNode(node.node_id, span))
            per_sentence.append(
                AmrSentenceGraph(nodes=tuple(nodes), edges=graph.edges, root=graph.root)
            )
        new_doc = Document(
            doc_id=doc.doc_id,
            words=doc.words,
            sentence_bounds=doc.sentence_bounds,
            dep_parents=doc.dep_parents,
            coref_clusters=doc.coref_clusters,
            amr=tuple(per_sentence),
        )
        new_doc.validate()
        merged.append((new_doc, list(events)))
    return merged


def synthetic_sentence_graph(
    doc: Document, sid: int, spans: Iterable[Span], labels: Iterable[str]
) -> AmrSentenceGraph:
    """Small helper for building a star-shaped sentence graph over given spans.

    The first span becomes the root; subsequent spans attach to it with the
    given labels. Used by data-preparation utilities and tests.
    """
    spans = list(spans)
    labels = list(labels)
    if not spans:
        raise GraphError("need at least one span for a sentence graph")
    if len(labels) != max(0, len(spans) - 1):
        raise GraphError("need exactly one label per non-root span")
    bounds = doc.sentence_span(sid)
    for span in spans:
        if not bounds.contains(span):
            raise GraphError(f"span [{span.start}, {span.end}] outside sentence {sid}")
    nodes = tuple(AmrNode(i, span) for i, span in enumerate(spans))
    edges = tuple(AmrEdge(0, i + 1, label) for i, label in enumerate(labels))
    return AmrSentenceGraph(nodes=nodes, edges=edges, root=0)
