import random

import pytest
import torch

from docarg.amr import (
    NUM_CATEGORIES,
    NUM_LOCAL_CATEGORIES,
    GraphNode,
    InteractionGraph,
    RelationCategory,
    build_global_graph,
    build_local_graph,
)
from docarg.corpus import Span
from docarg.errors import ConfigError, GraphError
from docarg.interaction import (
    GraphInteraction,
    TwoStreamInteraction,
    compose_nodes,
    decompose,
    finalize_nodes,
    rgcn_layer,
    run_interaction,
)
from docarg.twostream import TwoStreamState
from synthcorpus import synth_corpus


def random_graph(rng, max_nodes=6, max_categories=3, num_words=0):
    """Arbitrary typed graph; optionally with word alignments."""
    n = rng.randint(1, max_nodes)
    cats = rng.sample(range(NUM_CATEGORIES), rng.randint(1, max_categories))
    neighbors = [dict() for _ in range(n)]
    for _ in range(rng.randint(0, n * 2)):
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v:
            continue
        k = RelationCategory(rng.choice(cats))
        neighbors[u].setdefault(k, set()).add(v)
        neighbors[v].setdefault(k, set()).add(u)
    nodes = []
    for i in range(n):
        span = None
        if num_words and rng.random() < 0.8:
            a = rng.randint(1, num_words)
            b = min(num_words, a + rng.randint(0, 2))
            span = Span(a, b)
        nodes.append(GraphNode(index=i, span=span, sentence=1))
    return InteractionGraph(
        nodes=nodes,
        neighbors=[{k: frozenset(v) for k, v in d.items()} for d in neighbors],
        roots=[0],
    )


def reference_layer(h, graph, weights, self_weight=None):
    """Direct transcription of the propagation rule, one node at a time."""
    n, d = h.shape
    out = torch.zeros_like(h)
    for u in range(n):
        acc = torch.zeros(d, dtype=h.dtype)
        for k in range(weights.shape[0]):
            nb = set(graph.neighbor_set(u, RelationCategory(k)))
            if self_weight is None:
                members = nb | {u}
                c = len(members)
                for v in sorted(members):
                    acc += weights[k] @ h[v] / c
            elif nb:
                c = len(nb)
                for v in sorted(nb):
                    acc += weights[k] @ h[v] / c
        if self_weight is not None:
            acc += self_weight @ h[u]
        out[u] = torch.relu(acc)
    return out


# ---------------------------------------------------------------------------
# Propagation oracle.
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("single_self_loop", [False, True])
def test_rgcn_layer_matches_reference(single_self_loop):
    rng = random.Random(42)
    for _ in range(25):
        graph = random_graph(rng)
        n = len(graph)
        h = torch.randn(n, 5, dtype=torch.float64)
        weights = torch.randn(NUM_CATEGORIES, 5, 5, dtype=torch.float64)
        self_weight = (
            torch.randn(5, 5, dtype=torch.float64) if single_self_loop else None
        )
        got = rgcn_layer(h, graph, weights, self_weight)
        want = reference_layer(h, graph, weights, self_weight)
        assert float((got - want).abs().max()) < 1e-12


def test_rgcn_isolated_node_default_mode():
    # with no edges at all, each category contributes W_k h (self only),
    # so the output is relu(sum_k W_k h)
    graph = InteractionGraph(
        nodes=[GraphNode(0, None, 1)], neighbors=[{}], roots=[0]
    )
    h = torch.randn(1, 4, dtype=torch.float64)
    weights = torch.randn(NUM_CATEGORIES, 4, 4, dtype=torch.float64)
    got = rgcn_layer(h, graph, weights)
    want = torch.relu(weights.sum(dim=0) @ h[0])
    assert float((got[0] - want).abs().max()) < 1e-12


def test_rgcn_isolated_node_single_self_loop_mode():
    # empty categories contribute nothing; only the dedicated self transform fires
    graph = InteractionGraph(
        nodes=[GraphNode(0, None, 1)], neighbors=[{}], roots=[0]
    )
    h = torch.randn(1, 4, dtype=torch.float64)
    weights = torch.randn(NUM_CATEGORIES, 4, 4, dtype=torch.float64)
    self_weight = torch.randn(4, 4, dtype=torch.float64)
    got = rgcn_layer(h, graph, weights, self_weight)
    want = torch.relu(self_weight @ h[0])
    assert float((got[0] - want).abs().max()) < 1e-12


def test_rgcn_empty_graph_passthrough():
    graph = InteractionGraph(nodes=[], neighbors=[], roots=[])
    h = torch.zeros(0, 4)
    out = rgcn_layer(h, graph, torch.randn(NUM_CATEGORIES, 4, 4))
    assert out.shape == (0, 4)


def test_interaction_graph_rejects_self_neighbors():
    with pytest.raises(GraphError):
        InteractionGraph(
            nodes=[GraphNode(0, None, 1)],
            neighbors=[{RelationCategory.ARG0: frozenset({0})}],
            roots=[0],
        )


# ---------------------------------------------------------------------------
# Compose / decompose contracts.
# ---------------------------------------------------------------------------


def test_compose_nodes_takes_span_means():
    z = torch.arange(12, dtype=torch.float64).reshape(4, 3)
    graph = InteractionGraph(
        nodes=[
            GraphNode(0, Span(1, 1), 1),
            GraphNode(1, Span(2, 4), 1),
            GraphNode(2, None, 1),
        ],
        neighbors=[{}, {}, {}],
        roots=[0],
    )
    h = compose_nodes(z, graph)
    assert torch.equal(h[0], z[0])
    assert torch.equal(h[1], z[1:4].mean(dim=0))
    assert torch.equal(h[2], torch.zeros(3, dtype=torch.float64))


def test_compose_nodes_rejects_out_of_range():
    z = torch.zeros(2, 3)
    graph = InteractionGraph(
        nodes=[GraphNode(0, Span(2, 3), 1)], neighbors=[{}], roots=[0]
    )
    with pytest.raises(GraphError):
        compose_nodes(z, graph)


def test_decompose_uncovered_tokens_identity():
    z = torch.randn(5, 3, dtype=torch.float64)
    graph = InteractionGraph(
        nodes=[GraphNode(0, Span(2, 3), 1)], neighbors=[{}], roots=[0]
    )
    nodes = torch.randn(1, 3, dtype=torch.float64)
    out = decompose(z, graph, nodes)
    assert torch.equal(out[0], z[0])
    assert torch.equal(out[3], z[3])
    assert torch.equal(out[4], z[4])
    assert torch.equal(out[1], z[1] + nodes[0])
    assert torch.equal(out[2], z[2] + nodes[0])


def test_decompose_multi_cover_average():
    z = torch.zeros(3, 2, dtype=torch.float64)
    graph = InteractionGraph(
        nodes=[
            GraphNode(0, Span(1, 2), 1),
            GraphNode(1, Span(2, 3), 1),
            GraphNode(2, Span(2, 2), 1),
        ],
        neighbors=[{}, {}, {}],
        roots=[0],
    )
    nodes = torch.tensor([[3.0, 0.0], [0.0, 6.0], [3.0, 3.0]], dtype=torch.float64)
    out = decompose(z, graph, nodes)
    assert torch.equal(out[0], nodes[0])
    assert torch.equal(out[1], nodes.mean(dim=0))
    assert torch.equal(out[2], nodes[1])


def test_decompose_zero_nodes_is_identity():
    rng = random.Random(7)
    for _ in range(10):
        graph = random_graph(rng, num_words=6)
        z = torch.randn(6, 4, dtype=torch.float64)
        out = decompose(z, graph, torch.zeros(len(graph), 4, dtype=torch.float64))
        assert torch.equal(out, z)


def test_finalize_nodes_projects_concatenation():
    states = [torch.randn(3, 2, dtype=torch.float64) for _ in range(3)]
    agg = torch.randn(2, 6, dtype=torch.float64)
    out = finalize_nodes(states, agg)
    assert torch.allclose(out, torch.cat(states, dim=1) @ agg.T)
    with pytest.raises(ConfigError):
        finalize_nodes(states[:2], agg)


# ---------------------------------------------------------------------------
# Full module behavior.
# ---------------------------------------------------------------------------


def test_graph_interaction_empty_graph_returns_input():
    module = GraphInteraction(dim=4, num_layers=2)
    z = torch.randn(5, 4)
    graph = InteractionGraph(nodes=[], neighbors=[], roots=[])
    assert torch.equal(module(z, graph), z)


def test_graph_interaction_changes_covered_tokens_only():
    corpus = synth_corpus(seed=31, num_docs=1)
    doc, _ = corpus[0]
    graph = build_local_graph(doc)
    covered = set()
    for span in graph.alignment_spans():
        if span is not None:
            covered.update(range(span.start, span.end + 1))
    torch.manual_seed(0)
    module = GraphInteraction(dim=8, num_layers=2)
    z = torch.randn(len(doc), 8)
    out = module(z, graph)
    for i in range(len(doc)):
        if i + 1 not in covered:
            assert torch.equal(out[i], z[i])


def test_local_interaction_respects_sentence_isolation():
    corpus = synth_corpus(seed=55, num_docs=1, num_sentences=3)
    doc, _ = corpus[0]
    graph = build_local_graph(doc)
    torch.manual_seed(3)
    module = GraphInteraction(dim=8, num_layers=3).eval()
    z1 = torch.randn(len(doc), 8)
    z2 = z1.clone()
    s2 = doc.sentence_bounds[1]
    z2[s2[0] - 1 : s2[1]] += torch.randn(s2[1] - s2[0] + 1, 8)
    out1, out2 = module(z1, graph), module(z2, graph)
    for i in range(len(doc)):
        sid = 1 if i + 1 <= doc.sentence_bounds[0][1] else (2 if i + 1 <= s2[1] else 3)
        if sid != 2:
            assert torch.equal(out1[i], out2[i]), f"word {i + 1} leaked across sentences"


def test_global_interaction_lets_information_travel():
    corpus = synth_corpus(seed=55, num_docs=1, num_sentences=3)
    doc, _ = corpus[0]
    graph = build_global_graph(doc)
    torch.manual_seed(3)
    module = GraphInteraction(dim=8, num_layers=3).eval()
    z1 = torch.randn(len(doc), 8)
    z2 = z1.clone()
    s2 = doc.sentence_bounds[1]
    z2[s2[0] - 1 : s2[1]] += torch.randn(s2[1] - s2[0] + 1, 8)
    out1, out2 = module(z1, graph), module(z2, graph)
    changed_outside = any(
        not torch.equal(out1[i], out2[i])
        for i in range(len(doc))
        if not (s2[0] <= i + 1 <= s2[1])
    )
    assert changed_outside


def test_module_gradients_match_finite_differences():
    rng = random.Random(17)
    graph = random_graph(rng, max_nodes=5, num_words=6)
    module = GraphInteraction(dim=3, num_layers=2).double()
    z = torch.randn(6, 3, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(
        lambda x: module(x, graph), (z,), eps=1e-6, atol=1e-6, rtol=1e-4
    )


def test_two_stream_interaction_wiring():
    corpus = synth_corpus(seed=77, num_docs=1)
    doc, _ = corpus[0]
    local = build_local_graph(doc)
    glob = build_global_graph(doc)
    torch.manual_seed(5)
    module = TwoStreamInteraction(dim=8, num_layers=2)
    zg, zl = torch.randn(len(doc), 8), torch.randn(len(doc), 8)
    state = TwoStreamState(zg, zl, trigger_sentence=1)
    hg, hl = module(state, local, glob)
    assert hg.shape == zg.shape and hl.shape == zl.shape
    assert not torch.equal(hg, zg) and not torch.equal(hl, zl)
    # disabled or missing graphs pass the streams through untouched
    pg, pl = module(state, local, glob, enabled=False)
    assert torch.equal(pg, zg) and torch.equal(pl, zl)
    pg, pl = run_interaction(state, None, None, module)
    assert torch.equal(pg, zg) and torch.equal(pl, zl)


def test_two_stream_weight_sharing_flag():
    module = TwoStreamInteraction(dim=4, num_layers=1, share_weights=True)
    assert module.local_stream is module.global_stream
    separate = TwoStreamInteraction(dim=4, num_layers=1)
    assert separate.local_stream is not separate.global_stream
    assert separate.local_stream.layers[0].weight.shape[0] == NUM_LOCAL_CATEGORIES
    assert separate.global_stream.layers[0].weight.shape[0] == NUM_CATEGORIES


def test_graph_interaction_rejects_zero_layers():
    with pytest.raises(ConfigError):
        GraphInteraction(dim=4, num_layers=0)
