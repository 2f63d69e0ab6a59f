"""Fusion of the two streams and span-based role classification.

A sigmoid gate mixes the graph-enriched global and local word matrices into
one representation per word. Candidate spans are scored against the trigger
with a two-layer classifier over a comparison feature vector, and two scalar
scorers per word learn argument start/end boundaries as an auxiliary task.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import torch
from torch import nn
from torch.nn import functional as F

from .corpus import EventInstance, Schema, Span, SpanCandidate
from .errors import ConfigError, CorpusFormatError


class GatedFusion(nn.Module):
    """Per-dimension convex mix of the two streams: g*global + (1-g)*local."""

    def __init__(self, dim: int) -> None:
        super().__init__()
        self.gate_global = nn.Linear(dim, dim, bias=True)
        self.gate_local = nn.Linear(dim, dim, bias=False)

    def gate(self, h_global: torch.Tensor, h_local: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.gate_global(h_global) + self.gate_local(h_local))

    def forward(
        self, h_global: torch.Tensor, h_local: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        g = self.gate(h_global, h_local)
        return g * h_global + (1.0 - g) * h_local, g


@dataclass
class HeadOutput:
    """Everything the head computes for one event, kept for loss and decoding."""

    fused: torch.Tensor
    gate: torch.Tensor
    role_logits: torch.Tensor
    start_logits: torch.Tensor
    end_logits: torch.Tensor
    candidates: list[SpanCandidate] = field(repr=False, default_factory=list)


@dataclass
class RolePrediction:
    role: str
    span: Span
    score: float

    def to_wire(self) -> dict:
        return {"role": self.role, "span": self.span.to_wire(), "score": self.score}

    @classmethod
    def from_wire(cls, obj: dict) -> "RolePrediction":
        return cls(
            role=obj["role"],
            span=Span.from_wire(obj["span"], "prediction span"),
            score=float(obj["score"]),
        )


@dataclass
class EventPrediction:
    doc_id: str
    event_index: int
    predictions: list[RolePrediction]

    def to_wire(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "event_index": self.event_index,
            "predictions": [p.to_wire() for p in self.predictions],
        }

    @classmethod
    def from_wire(cls, obj: dict) -> "EventPrediction":
        return cls(
            doc_id=obj["doc_id"],
            event_index=int(obj["event_index"]),
            predictions=[RolePrediction.from_wire(p) for p in obj["predictions"]],
        )


class FusionHead(nn.Module):
    """Gate, span scorer, boundary scorers, and the role classifier."""

    def __init__(
        self,
        dim: int,
        num_roles: int,
        num_event_types: int,
        max_span_len: int = 8,
        d_type: int = 64,
        d_len: int = 64,
        hidden_dim: int | None = None,
        dropout: float = 0.1,
        share_boundary_projections: bool = True,
    ) -> None:
        super().__init__()
        if num_roles < 2:
            raise ConfigError("need the null role plus at least one real role")
        self.dim = dim
        self.num_roles = num_roles
        self.max_span_len = max_span_len
        self.fusion = GatedFusion(dim)
        self.start_proj = nn.Linear(dim, dim)
        self.end_proj = nn.Linear(dim, dim)
        self.span_proj = nn.Linear(3 * dim, dim)
        # boundary scorers read the same projected start/end features the span
        # representation uses, unless configured to keep their own projections
        if share_boundary_projections:
            self.boundary_start_proj = self.start_proj
            self.boundary_end_proj = self.end_proj
        else:
            self.boundary_start_proj = nn.Linear(dim, dim)
            self.boundary_end_proj = nn.Linear(dim, dim)
        self.start_scorer = nn.Linear(dim, 1)
        self.end_scorer = nn.Linear(dim, 1)
        self.type_embedding = nn.Embedding(num_event_types, d_type)
        self.len_embedding = nn.Embedding(max_span_len + 1, d_len)
        hidden = hidden_dim if hidden_dim is not None else dim
        self.classifier = nn.Sequential(
            nn.Linear(4 * dim + d_type + d_len, hidden),
            nn.ReLU(),
            nn.Dropout(dropout),
            nn.Linear(hidden, num_roles),
        )

    # -- pieces ------------------------------------------------------------

    def span_representations(
        self, fused: torch.Tensor, candidates: list[SpanCandidate]
    ) -> torch.Tensor:
        if not candidates:
            return fused.new_zeros((0, self.dim))
        starts = torch.tensor([c.start - 1 for c in candidates], dtype=torch.long)
        ends = torch.tensor([c.end - 1 for c in candidates], dtype=torch.long)
        prefix = torch.cat([fused.new_zeros((1, fused.shape[1])), fused.cumsum(dim=0)], dim=0)
        lengths = (ends - starts + 1).to(fused.dtype).unsqueeze(1)
        means = (prefix[ends + 1] - prefix[starts]) / lengths
        parts = torch.cat(
            [self.start_proj(fused[starts]), self.end_proj(fused[ends]), means], dim=1
        )
        return self.span_proj(parts)

    def trigger_representation(self, fused: torch.Tensor, trigger: Span) -> torch.Tensor:
        return fused[trigger.start - 1 : trigger.end].mean(dim=0)

    def boundary_logits(self, fused: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        start = self.start_scorer(self.boundary_start_proj(fused)).squeeze(-1)
        end = self.end_scorer(self.boundary_end_proj(fused)).squeeze(-1)
        return start, end

    def role_logits(
        self,
        fused: torch.Tensor,
        trigger: Span,
        candidates: list[SpanCandidate],
        event_type_id: int,
    ) -> torch.Tensor:
        if not candidates:
            return fused.new_zeros((0, self.num_roles))
        spans = self.span_representations(fused, candidates)
        trig = self.trigger_representation(fused, trigger).unsqueeze(0).expand_as(spans)
        lengths = torch.tensor([len(c) for c in candidates], dtype=torch.long)
        type_vec = self.type_embedding.weight[event_type_id].unsqueeze(0).expand(
            len(candidates), -1
        )
        features = torch.cat(
            [trig, spans, (trig - spans).abs(), trig * spans, type_vec, self.len_embedding(lengths)],
            dim=1,
        )
        return self.classifier(features)

    # -- full forward --------------------------------------------------------

    def forward(
        self,
        h_global: torch.Tensor,
        h_local: torch.Tensor,
        trigger: Span,
        candidates: list[SpanCandidate],
        event_type_id: int,
    ) -> HeadOutput:
        fused, gate = self.fusion(h_global, h_local)
        start_logits, end_logits = self.boundary_logits(fused)
        logits = self.role_logits(fused, trigger, candidates, event_type_id)
        return HeadOutput(
            fused=fused,
            gate=gate,
            role_logits=logits,
            start_logits=start_logits,
            end_logits=end_logits,
            candidates=list(candidates),
        )


def write_predictions(
    path, predictions: list[EventPrediction], meta: dict | None = None
) -> None:
    """Predictions as JSONL: one meta header record, then one record per event."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"meta": meta or {}}) + "\n")
        for pred in predictions:
            f.write(json.dumps(pred.to_wire()) + "\n")


def read_predictions(path) -> tuple[list[EventPrediction], dict]:
    meta: dict = {}
    predictions: list[EventPrediction] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "meta" in obj:
                meta = obj["meta"]
            else:
                try:
                    predictions.append(EventPrediction.from_wire(obj))
                except (KeyError, TypeError, ValueError) as exc:
                    raise CorpusFormatError(
                        f"{path}:{line_no}: bad prediction record: {exc}"
                    ) from exc
    return predictions, meta


# ---------------------------------------------------------------------------
# Supervision and losses.
# ---------------------------------------------------------------------------


def label_candidates(
    candidates: list[SpanCandidate],
    event: EventInstance,
    schema: Schema,
    num_words: int,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, int]:
    """Gold role id per candidate plus per-word start/end boundary targets.

    Returns (role_ids [C], start_targets [W], end_targets [W], unreachable),
    where ``unreachable`` counts gold arguments no candidate covers (too long
    or crossing a sentence boundary). Boundary targets still mark them.
    """
    gold: dict[tuple[int, int], int] = {}
    start_targets = torch.zeros(num_words)
    end_targets = torch.zeros(num_words)
    for arg in event.arguments:
        key = (arg.span.start, arg.span.end)
        if key not in gold:
            gold[key] = schema.role_id(arg.role)
        start_targets[arg.span.start - 1] = 1.0
        end_targets[arg.span.end - 1] = 1.0
    role_ids = torch.zeros(len(candidates), dtype=torch.long)
    matched = set()
    for i, cand in enumerate(candidates):
        key = (cand.start, cand.end)
        if key in gold:
            role_ids[i] = gold[key]
            matched.add(key)
    return role_ids, start_targets, end_targets, len(event.arguments) - len(matched)


def boundary_loss(
    start_logits: torch.Tensor,
    start_targets: torch.Tensor,
    end_logits: torch.Tensor,
    end_targets: torch.Tensor,
) -> torch.Tensor:
    """Summed binary cross-entropy over every word's start and end scores."""
    return F.binary_cross_entropy_with_logits(
        start_logits, start_targets, reduction="sum"
    ) + F.binary_cross_entropy_with_logits(end_logits, end_targets, reduction="sum")


def classification_loss(role_logits: torch.Tensor, role_targets: torch.Tensor) -> torch.Tensor:
    """Summed cross-entropy over candidates; zero when there are none."""
    if role_logits.shape[0] == 0:
        return role_logits.sum()
    return F.cross_entropy(role_logits, role_targets, reduction="sum")


def total_loss(
    classification: torch.Tensor, boundary: torch.Tensor, boundary_weight: float
) -> torch.Tensor:
    """Joint objective: classification plus ``boundary_weight`` times boundary."""
    if boundary_weight < 0:
        raise ConfigError(f"boundary weight must be >= 0, got {boundary_weight}")
    return classification + boundary_weight * boundary


@dataclass
class LossParts:
    classification: float
    boundary: float


def event_loss(
    output: HeadOutput,
    role_targets: torch.Tensor,
    start_targets: torch.Tensor,
    end_targets: torch.Tensor,
    boundary_weight: float = 0.1,
    use_boundary_loss: bool = True,
) -> tuple[torch.Tensor, LossParts]:
    """Both loss terms for one event, combined for the optimizer.

    With ``use_boundary_loss=False`` the boundary term is still computed and
    reported but contributes nothing to the optimized total.
    """
    l_c = classification_loss(output.role_logits, role_targets)
    l_b = boundary_loss(output.start_logits, start_targets, output.end_logits, end_targets)
    combined = total_loss(l_c, l_b, boundary_weight) if use_boundary_loss else l_c
    return combined, LossParts(classification=float(l_c.item()), boundary=float(l_b.item()))


# ---------------------------------------------------------------------------
# Decoding.
# ---------------------------------------------------------------------------


def decode_event(
    output: HeadOutput,
    schema: Schema,
    event_type: str,
    trigger: Span | None = None,
    legal_role_mask: bool = True,
    top1_per_role: bool = False,
    exclude_trigger_overlap: bool = False,
) -> list[RolePrediction]:
    """Greedy per-candidate decoding: argmax role, keep non-null predictions.

    ``legal_role_mask`` restricts each candidate to the event type's role
    inventory (when the schema defines one). ``top1_per_role`` keeps only the
    best-scoring span per role. ``exclude_trigger_overlap`` drops candidates
    overlapping the trigger span.
    """
    if output.role_logits.shape[0] == 0:
        return []
    logits = output.role_logits
    if legal_role_mask:
        legal = schema.legal_role_ids(event_type)
        if legal:
            allowed = torch.zeros(schema.num_roles, dtype=torch.bool)
            allowed[0] = True
            for rid in legal:
                allowed[rid] = True
            logits = logits.masked_fill(~allowed.unsqueeze(0), float("-inf"))
    probs = torch.softmax(logits.detach(), dim=-1)
    best_scores, best_roles = probs.max(dim=-1)
    picked: list[RolePrediction] = []
    for i, cand in enumerate(output.candidates):
        rid = int(best_roles[i])
        if rid == 0:
            continue
        if exclude_trigger_overlap and trigger is not None and cand.span.overlaps(trigger):
            continue
        picked.append(
            RolePrediction(
                role=schema.role_name(rid), span=cand.span, score=float(best_scores[i])
            )
        )
    if top1_per_role:
        best_by_role: dict[str, RolePrediction] = {}
        for pred in picked:
            cur = best_by_role.get(pred.role)
            if (
                cur is None
                or pred.score > cur.score
                or (
                    pred.score == cur.score
                    and (pred.span.start, pred.span.end) < (cur.span.start, cur.span.end)
                )
            ):
                best_by_role[pred.role] = pred
        picked = list(best_by_role.values())
    picked.sort(key=lambda p: (p.span.start, p.span.end, p.role))
    return picked
