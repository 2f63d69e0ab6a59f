"""Semantic-graph interaction between the two encoding streams.

Word vectors are composed into graph-node vectors, propagated through a
relation-typed graph convolution, and decomposed back onto the words each
node covers. The local stream interacts over the per-sentence graphs; the
global stream over their root-linked union.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .amr import NUM_CATEGORIES, NUM_LOCAL_CATEGORIES, InteractionGraph
from .errors import ConfigError, GraphError
from .twostream import TwoStreamState


def compose_nodes(z: torch.Tensor, graph: InteractionGraph) -> torch.Tensor:
    """Initial node matrix: each aligned node averages its span's word vectors.

    Nodes without a word alignment start from the zero vector.
    """
    num_words, dim = z.shape
    out = z.new_zeros((len(graph), dim))
    for idx, span in enumerate(graph.alignment_spans()):
        if span is None:
            continue
        if span.end > num_words:
            raise GraphError(
                f"node {idx} aligned to words {span.start}..{span.end} but the"
                f" document has only {num_words} words"
            )
        out[idx] = z[span.start - 1 : span.end].mean(dim=0)
    return out


def rgcn_layer(
    h: torch.Tensor,
    graph: InteractionGraph,
    weights: torch.Tensor,
    self_weight: torch.Tensor | None = None,
) -> torch.Tensor:
    """One relation-typed propagation step.

    Every node receives, per relation category k, the normalized sum over its
    category-k neighborhood together with itself, transformed by that
    category's matrix ``weights[k]``; the category contributions are summed and
    pass through a ReLU. The normalizer is the neighborhood-plus-self size.

    When ``self_weight`` is given, the node's own vector instead enters once
    through that matrix, and neighborhood sums exclude the self term.
    """
    n = h.shape[0]
    if n == 0:
        return h
    num_categories = weights.shape[0]
    out = torch.zeros_like(h)
    for k in range(num_categories):
        rows, cols = graph.category_pairs(k)
        if self_weight is not None:
            if not rows:
                continue
            idx = torch.tensor(rows, dtype=torch.long, device=h.device)
            agg = torch.zeros_like(h)
            agg.index_add_(0, idx, h[torch.tensor(cols, dtype=torch.long, device=h.device)])
            deg = torch.bincount(idx, minlength=n).to(h.dtype).clamp(min=1.0)
            out = out + (agg / deg.unsqueeze(1)) @ weights[k].T
        else:
            agg = h.clone()
            deg = torch.ones(n, dtype=h.dtype, device=h.device)
            if rows:
                idx = torch.tensor(rows, dtype=torch.long, device=h.device)
                agg.index_add_(
                    0, idx, h[torch.tensor(cols, dtype=torch.long, device=h.device)]
                )
                deg = deg + torch.bincount(idx, minlength=n).to(h.dtype)
            out = out + (agg / deg.unsqueeze(1)) @ weights[k].T
    if self_weight is not None:
        out = out + h @ self_weight.T
    return torch.relu(out)


def finalize_nodes(states: list[torch.Tensor], aggregate: torch.Tensor) -> torch.Tensor:
    """Project the concatenation of all layer states down to one vector per node."""
    stacked = torch.cat(states, dim=1)
    if aggregate.shape[1] != stacked.shape[1]:
        raise ConfigError(
            f"aggregation matrix expects width {aggregate.shape[1]},"
            f" got {stacked.shape[1]} from {len(states)} layer states"
        )
    return stacked @ aggregate.T


def decompose(
    z: torch.Tensor, graph: InteractionGraph, node_vectors: torch.Tensor
) -> torch.Tensor:
    """Residual word update: add the mean of covering-node vectors to each word.

    Words no node covers pass through unchanged.
    """
    num_words, dim = z.shape
    summed = z.new_zeros((num_words, dim))
    counts = z.new_zeros(num_words)
    for idx, span in enumerate(graph.alignment_spans()):
        if span is None:
            continue
        summed[span.start - 1 : span.end] += node_vectors[idx]
        counts[span.start - 1 : span.end] += 1
    covered = counts > 0
    update = torch.zeros_like(summed)
    update[covered] = summed[covered] / counts[covered].unsqueeze(1)
    return z + update


class RelationalGraphLayer(nn.Module):
    """Learnable weights for one :func:`rgcn_layer` step."""

    def __init__(self, dim: int, num_categories: int, single_self_loop: bool = False) -> None:
        super().__init__()
        self.dim = dim
        self.num_categories = num_categories
        self.weight = nn.Parameter(torch.empty(num_categories, dim, dim))
        self.self_weight = nn.Parameter(torch.empty(dim, dim)) if single_self_loop else None
        self.reset_parameters()

    def reset_parameters(self) -> None:
        bound = 1.0 / math.sqrt(self.dim)
        nn.init.uniform_(self.weight, -bound, bound)
        if self.self_weight is not None:
            nn.init.uniform_(self.self_weight, -bound, bound)

    def forward(self, h: torch.Tensor, graph: InteractionGraph) -> torch.Tensor:
        return rgcn_layer(h, graph, self.weight, self.self_weight)


class GraphInteraction(nn.Module):
    """Compose words into nodes, run L graph layers, project the layer stack,
    and decompose back onto words."""

    def __init__(
        self,
        dim: int,
        num_layers: int = 3,
        num_categories: int = NUM_CATEGORIES,
        single_self_loop: bool = False,
    ) -> None:
        super().__init__()
        if num_layers < 1:
            raise ConfigError(f"need at least one graph layer, got {num_layers}")
        self.dim = dim
        self.num_layers = num_layers
        self.num_categories = num_categories
        self.layers = nn.ModuleList(
            RelationalGraphLayer(dim, num_categories, single_self_loop)
            for _ in range(num_layers)
        )
        self.aggregate = nn.Parameter(torch.empty(dim, dim * (num_layers + 1)))
        bound = 1.0 / math.sqrt(dim)
        nn.init.uniform_(self.aggregate, -bound, bound)

    def node_states(self, z: torch.Tensor, graph: InteractionGraph) -> torch.Tensor:
        """All-layer node representations fused by the aggregation projection."""
        h = compose_nodes(z, graph)
        states = [h]
        for layer in self.layers:
            h = layer(h, graph)
            states.append(h)
        return finalize_nodes(states, self.aggregate)

    def forward(self, z: torch.Tensor, graph: InteractionGraph) -> torch.Tensor:
        if len(graph) == 0:
            return z
        return decompose(z, graph, self.node_states(z, graph))


class TwoStreamInteraction(nn.Module):
    """Applies graph interaction to both streams.

    By default the two streams get separate parameter sets, sized to their
    graphs' category counts (the per-sentence graphs never carry root-link
    edges). ``share_weights`` reuses the global-stream module for both.
    """

    def __init__(
        self,
        dim: int,
        num_layers: int = 3,
        single_self_loop: bool = False,
        share_weights: bool = False,
    ) -> None:
        super().__init__()
        self.share_weights = share_weights
        self.global_stream = GraphInteraction(
            dim, num_layers, NUM_CATEGORIES, single_self_loop
        )
        if share_weights:
            self.local_stream = self.global_stream
        else:
            self.local_stream = GraphInteraction(
                dim, num_layers, NUM_LOCAL_CATEGORIES, single_self_loop
            )

    def forward(
        self,
        state: TwoStreamState,
        local_graph: InteractionGraph | None,
        global_graph: InteractionGraph | None,
        enabled: bool = True,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        return run_interaction(state, local_graph, global_graph, self, enabled=enabled)


def run_interaction(
    state: TwoStreamState,
    local_graph: InteractionGraph | None,
    global_graph: InteractionGraph | None,
    module: TwoStreamInteraction,
    enabled: bool = True,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Graph-enriched (global, local) word matrices.

    With ``enabled=False`` (or absent graphs) the streams pass through
    untouched, which is the graph-interaction ablation.
    """
    if not enabled or global_graph is None or local_graph is None:
        return state.z_global, state.z_local
    h_global = module.global_stream(state.z_global, global_graph)
    h_local = module.local_stream(state.z_local, local_graph)
    return h_global, h_local
