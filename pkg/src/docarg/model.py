"""The assembled extractor: two-stream encoder, graph interaction, fusion head.

Also owns example preparation (windowing, candidate enumeration, graph
construction, supervision targets), which is static per event and computed
once before training.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn

from .amr import InteractionGraph, build_global_graph, build_local_graph
from .config import RunConfig
from .corpus import (
    Document,
    DocumentWindow,
    EventInstance,
    Schema,
    Span,
    SpanCandidate,
    enumerate_candidates,
)
from .errors import ConfigError
from .fusion_head import (
    EventPrediction,
    FusionHead,
    HeadOutput,
    RolePrediction,
    decode_event,
    label_candidates,
)
from .interaction import TwoStreamInteraction
from .twostream import (
    ChunkTokenizer,
    DocumentEncoder,
    EncodeTrace,
    SubwordTokenizer,
    TwoStreamState,
    fit_event,
    load_pretrained_encoder,
)


@dataclass
class PreparedEvent:
    """Everything static about one training/inference example."""

    doc_id: str
    event_index: int
    doc: Document
    event: EventInstance
    window: DocumentWindow | None
    event_type_id: int
    candidates: list[SpanCandidate] = field(repr=False)
    role_targets: torch.Tensor = field(repr=False)
    start_targets: torch.Tensor = field(repr=False)
    end_targets: torch.Tensor = field(repr=False)
    local_graph: InteractionGraph | None = field(repr=False)
    global_graph: InteractionGraph | None = field(repr=False)
    unreachable_gold: int = 0

    @property
    def trigger(self) -> Span:
        return self.event.trigger

    def map_back(self, span: Span) -> Span:
        return self.window.map_span_from_window(span) if self.window else span


class ArgumentExtractor(nn.Module):
    """End-to-end document-level argument extraction model."""

    def __init__(
        self,
        config: RunConfig,
        schema: Schema,
        tokenizer: SubwordTokenizer | None = None,
    ) -> None:
        super().__init__()
        self.config = config
        self.schema = schema
        encoder_cfg = config.encoder
        transformer = None
        if encoder_cfg.checkpoint:
            transformer, loaded_tokenizer, encoder_cfg = load_pretrained_encoder(
                encoder_cfg.checkpoint, encoder_cfg
            )
            tokenizer = tokenizer or loaded_tokenizer
            config.encoder = encoder_cfg
        if tokenizer is None:
            tokenizer = ChunkTokenizer(vocab_size=encoder_cfg.vocab_size)
        self.encoder = DocumentEncoder(encoder_cfg, tokenizer)
        if transformer is not None:
            self.encoder.transformer = transformer
        dim = encoder_cfg.hidden_dim
        self.interaction = TwoStreamInteraction(
            dim,
            num_layers=config.interaction.layers,
            single_self_loop=config.interaction.single_self_loop,
            share_weights=config.interaction.share_local_global_weights,
        )
        self.head = FusionHead(
            dim,
            num_roles=schema.num_roles,
            num_event_types=schema.num_event_types,
            max_span_len=config.head.max_span_len,
            d_type=config.head.d_type,
            d_len=config.head.d_len,
            hidden_dim=config.head.hidden_dim,
            dropout=config.head.dropout,
            share_boundary_projections=config.head.share_boundary_projections,
        )

    @property
    def graphs_enabled(self) -> bool:
        return self.config.interaction.enabled and self.config.ablation.use_amr

    @property
    def tokenizer(self) -> SubwordTokenizer:
        return self.encoder.tokenizer

    # -- example preparation -------------------------------------------------

    def prepare_event(
        self, doc: Document, event: EventInstance, event_index: int
    ) -> PreparedEvent:
        fitted_doc, fitted_event, window = fit_event(
            doc, event, self.tokenizer, self.config.encoder
        )
        candidates = enumerate_candidates(fitted_doc, self.config.head.max_span_len)
        role_targets, start_targets, end_targets, unreachable = label_candidates(
            candidates, fitted_event, self.schema, len(fitted_doc)
        )
        local_graph = global_graph = None
        if self.graphs_enabled and fitted_doc.amr is not None:
            local_graph = build_local_graph(fitted_doc)
            global_graph = build_global_graph(fitted_doc)
        return PreparedEvent(
            doc_id=doc.doc_id,
            event_index=event_index,
            doc=fitted_doc,
            event=fitted_event,
            window=window,
            event_type_id=self.schema.event_type_id(fitted_event.event_type),
            candidates=candidates,
            role_targets=role_targets,
            start_targets=start_targets,
            end_targets=end_targets,
            local_graph=local_graph,
            global_graph=global_graph,
            unreachable_gold=unreachable,
        )

    def prepare_corpus(self, corpus) -> list[PreparedEvent]:
        prepared = []
        for doc, events in corpus:
            for idx, event in enumerate(events):
                prepared.append(self.prepare_event(doc, event, idx))
        return prepared

    # -- forward --------------------------------------------------------------

    def _apply_stream_ablation(self, state: TwoStreamState) -> TwoStreamState:
        ablation = self.config.ablation
        if ablation.use_global and ablation.use_local:
            return state
        if not (ablation.use_global or ablation.use_local):
            raise ConfigError("cannot disable both streams")
        z = state.z_local if not ablation.use_global else state.z_global
        return TwoStreamState(z, z, state.trigger_sentence)

    def forward_event(
        self, prep: PreparedEvent, collect_attention: bool = False
    ) -> tuple[HeadOutput, EncodeTrace | None]:
        state, trace = self.encoder.encode(prep.doc, prep.trigger, collect_attention)
        state = self._apply_stream_ablation(state)
        h_global, h_local = self.interaction(
            state,
            prep.local_graph,
            prep.global_graph,
            enabled=self.graphs_enabled,
        )
        output = self.head(
            h_global, h_local, prep.trigger, prep.candidates, prep.event_type_id
        )
        return output, trace

    # -- inference -------------------------------------------------------------

    @torch.no_grad()
    def predict_event(self, prep: PreparedEvent) -> EventPrediction:
        was_training = self.training
        self.eval()
        try:
            output, _ = self.forward_event(prep)
        finally:
            self.train(was_training)
        decoded = decode_event(
            output,
            self.schema,
            prep.event.event_type,
            trigger=prep.trigger,
            legal_role_mask=self.config.head.legal_role_mask,
            top1_per_role=self.config.head.top1_per_role,
            exclude_trigger_overlap=self.config.head.exclude_trigger_overlap,
        )
        mapped = [
            RolePrediction(role=p.role, span=prep.map_back(p.span), score=p.score)
            for p in decoded
        ]
        return EventPrediction(
            doc_id=prep.doc_id, event_index=prep.event_index, predictions=mapped
        )
