"""Two-stream document encoding.

The same transformer encodes each document twice: a global pass with
unrestricted self-attention and a local pass whose additive mask lets a word
attend only to its own sentence and the trigger's sentence. Both passes share
every parameter; they differ only in the mask.
"""

from __future__ import annotations

import json
import math
import os
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import torch
from torch import nn

from .corpus import Document, DocumentWindow, EventInstance, Span, window_document
from .errors import ConfigError, DocumentTooLongError, EncodingError

# additive stand-in for -inf; large enough that masked attention underflows to 0
MASK_NEG = -1.0e4

GLOBAL_SENTINEL = -1  # sentence id for marker tokens that attend everywhere


@dataclass
class EncoderConfig:
    """Architecture and runtime settings of the shared encoder."""

    checkpoint: str | None = None
    hidden_dim: int = 64
    num_layers: int = 2
    num_heads: int = 4
    ffn_dim: int | None = None
    vocab_size: int = 4096
    max_positions: int = 512
    type_vocab_size: int = 0
    layer_norm_eps: float = 1e-12
    dropout: float = 0.1
    attention_dropout: float = 0.1
    subword_pooling: str = "first"
    window_policy: str = "truncate"

    def __post_init__(self) -> None:
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.subword_pooling not in ("first", "mean"):
            raise ConfigError(f"unknown subword_pooling {self.subword_pooling!r}")
        if self.window_policy not in ("truncate", "trigger_centered"):
            raise ConfigError(f"unknown window_policy {self.window_policy!r}")
        if self.hidden_dim % self.num_heads != 0:
            raise ConfigError(
                f"hidden_dim {self.hidden_dim} not divisible by num_heads {self.num_heads}"
            )

    @property
    def d_m(self) -> int:
        return self.hidden_dim

    @property
    def intermediate_dim(self) -> int:
        return self.ffn_dim if self.ffn_dim is not None else 4 * self.hidden_dim


@dataclass
class SubwordEncoding:
    """Subword ids for one document plus the word-to-subword alignment."""

    ids: list[int]
    word_ranges: list[tuple[int, int]]
    special_positions: list[int]


class SubwordTokenizer(Protocol):
    def encode_words(self, words: Sequence[str]) -> SubwordEncoding: ...

    def num_pieces(self, word: str) -> int: ...


class ChunkTokenizer:
    """Deterministic fallback tokenizer: fixed-length character chunks, hashed ids.

    Words longer than ``chunk_len`` characters split into several pieces, which
    exercises the same alignment machinery as a learned subword vocabulary.
    """

    PAD, CLS, SEP, UNK = 0, 1, 2, 3
    _NUM_SPECIAL = 4

    def __init__(self, vocab_size: int = 4096, chunk_len: int = 4) -> None:
        if vocab_size <= self._NUM_SPECIAL:
            raise ConfigError(f"vocab_size must exceed {self._NUM_SPECIAL}")
        self.vocab_size = vocab_size
        self.chunk_len = chunk_len

    def _piece_id(self, piece: str) -> int:
        h = zlib.crc32(piece.encode("utf-8"))
        return self._NUM_SPECIAL + h % (self.vocab_size - self._NUM_SPECIAL)

    def _pieces(self, word: str) -> list[str]:
        if not word:
            return [""]
        return [word[i : i + self.chunk_len] for i in range(0, len(word), self.chunk_len)]

    def num_pieces(self, word: str) -> int:
        return len(self._pieces(word))

    def encode_words(self, words: Sequence[str]) -> SubwordEncoding:
        ids = [self.CLS]
        ranges = []
        for word in words:
            start = len(ids)
            ids.extend(self._piece_id(p) for p in self._pieces(word))
            ranges.append((start, len(ids) - 1))
        ids.append(self.SEP)
        return SubwordEncoding(ids=ids, word_ranges=ranges, special_positions=[0, len(ids) - 1])


class WordPieceTokenizer:
    """Greedy longest-match subword tokenizer over a published vocab.txt."""

    def __init__(self, vocab: dict[str, int], lowercase: bool = True) -> None:
        for tok in ("[CLS]", "[SEP]", "[UNK]"):
            if tok not in vocab:
                raise ConfigError(f"vocabulary lacks required token {tok}")
        self.vocab = vocab
        self.lowercase = lowercase
        self.cls_id = vocab["[CLS]"]
        self.sep_id = vocab["[SEP]"]
        self.unk_id = vocab["[UNK]"]

    @classmethod
    def from_file(cls, path: str | Path, lowercase: bool = True) -> "WordPieceTokenizer":
        vocab = {}
        with open(path, "r", encoding="utf-8") as f:
            for i, line in enumerate(f):
                vocab[line.rstrip("\n")] = i
        return cls(vocab, lowercase=lowercase)

    def _word_pieces(self, word: str) -> list[int]:
        if self.lowercase:
            word = word.lower()
        pieces: list[int] = []
        pos = 0
        while pos < len(word):
            end = len(word)
            found = None
            while end > pos:
                piece = word[pos:end]
                if pos > 0:
                    piece = "##" + piece
                if piece in self.vocab:
                    found = self.vocab[piece]
                    break
                end -= 1
            if found is None:
                return [self.unk_id]
            pieces.append(found)
            pos = end
        return pieces or [self.unk_id]

    def num_pieces(self, word: str) -> int:
        return len(self._word_pieces(word))

    def encode_words(self, words: Sequence[str]) -> SubwordEncoding:
        ids = [self.cls_id]
        ranges = []
        for word in words:
            start = len(ids)
            ids.extend(self._word_pieces(word))
            ranges.append((start, len(ids) - 1))
        ids.append(self.sep_id)
        return SubwordEncoding(ids=ids, word_ranges=ranges, special_positions=[0, len(ids) - 1])


def tokenizer_to_payload(tokenizer: SubwordTokenizer) -> dict:
    """Serializable description of a tokenizer, for embedding in checkpoints."""
    if isinstance(tokenizer, ChunkTokenizer):
        return {
            "kind": "chunk",
            "vocab_size": tokenizer.vocab_size,
            "chunk_len": tokenizer.chunk_len,
        }
    if isinstance(tokenizer, WordPieceTokenizer):
        return {"kind": "wordpiece", "vocab": tokenizer.vocab, "lowercase": tokenizer.lowercase}
    raise ConfigError(f"cannot serialize tokenizer of type {type(tokenizer).__name__}")


def tokenizer_from_payload(payload: dict) -> SubwordTokenizer:
    kind = payload.get("kind")
    if kind == "chunk":
        return ChunkTokenizer(vocab_size=payload["vocab_size"], chunk_len=payload["chunk_len"])
    if kind == "wordpiece":
        return WordPieceTokenizer(payload["vocab"], lowercase=payload["lowercase"])
    raise ConfigError(f"unknown tokenizer kind {kind!r} in checkpoint")


def build_local_mask(
    sentence_ids: Sequence[int],
    trigger_sentence: int,
    dtype: torch.dtype = torch.float32,
    neg: float = MASK_NEG,
) -> torch.Tensor:
    """Additive attention mask for the local pass.

    ``M[i][j]`` is 0 when position ``j``'s sentence is position ``i``'s own
    sentence or the trigger sentence, else ``neg``. Positions carrying the
    GLOBAL_SENTINEL id (marker tokens) attend and are attended freely.
    """
    if trigger_sentence < 1:
        raise EncodingError(f"trigger sentence id must be >= 1, got {trigger_sentence}")
    sids = torch.as_tensor(list(sentence_ids), dtype=torch.long)
    same = sids.view(1, -1) == sids.view(-1, 1)
    to_trigger = (sids == trigger_sentence).view(1, -1)
    allowed = same | to_trigger
    is_global = sids == GLOBAL_SENTINEL
    allowed = allowed | is_global.view(1, -1) | is_global.view(-1, 1)
    zero = torch.zeros((), dtype=dtype)
    return torch.where(allowed, zero, torch.full((), neg, dtype=dtype))


def pool_subwords(
    subword_reps: torch.Tensor,
    alignment: Sequence[tuple[int, int]],
    mode: str = "first",
) -> torch.Tensor:
    """Collapse subword rows to one vector per word (``first`` or ``mean``)."""
    if mode not in ("first", "mean"):
        raise ConfigError(f"unknown pooling mode {mode!r}")
    n = subword_reps.shape[0]
    starts, ends = [], []
    for w, (a, b) in enumerate(alignment):
        if b < a or a < 0 or b >= n:
            raise EncodingError(f"word {w} has an empty or out-of-range subword span ({a}, {b})")
        starts.append(a)
        ends.append(b)
    starts_t = torch.tensor(starts, dtype=torch.long)
    if mode == "first":
        return subword_reps[starts_t]
    ends_t = torch.tensor(ends, dtype=torch.long)
    word_of_subword = torch.zeros(n, dtype=torch.long)
    counts = torch.zeros(len(alignment), dtype=subword_reps.dtype)
    keep = torch.zeros(n, dtype=torch.bool)
    for w, (a, b) in enumerate(alignment):
        word_of_subword[a : b + 1] = w
        keep[a : b + 1] = True
        counts[w] = b - a + 1
    summed = torch.zeros(
        (len(alignment), subword_reps.shape[1]), dtype=subword_reps.dtype
    )
    summed.index_add_(0, word_of_subword[keep], subword_reps[keep])
    return summed / counts.unsqueeze(1)


class EncoderLayer(nn.Module):
    """Post-norm transformer block with additive attention masking."""

    def __init__(self, cfg: EncoderConfig) -> None:
        super().__init__()
        d = cfg.hidden_dim
        self.num_heads = cfg.num_heads
        self.head_dim = d // cfg.num_heads
        self.query = nn.Linear(d, d)
        self.key = nn.Linear(d, d)
        self.value = nn.Linear(d, d)
        self.attn_output = nn.Linear(d, d)
        self.attn_norm = nn.LayerNorm(d, eps=cfg.layer_norm_eps)
        self.ffn_in = nn.Linear(d, cfg.intermediate_dim)
        self.ffn_out = nn.Linear(cfg.intermediate_dim, d)
        self.ffn_norm = nn.LayerNorm(d, eps=cfg.layer_norm_eps)
        self.act = nn.GELU()
        self.dropout = nn.Dropout(cfg.dropout)
        self.attn_dropout = nn.Dropout(cfg.attention_dropout)

    def forward(
        self, hidden: torch.Tensor, mask: torch.Tensor | None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        t = hidden.shape[0]

        def split(x: torch.Tensor) -> torch.Tensor:
            return x.view(t, self.num_heads, self.head_dim).transpose(0, 1)

        q, k, v = split(self.query(hidden)), split(self.key(hidden)), split(self.value(hidden))
        scores = torch.matmul(q, k.transpose(-1, -2))
        if mask is not None:
            scores = scores + mask.unsqueeze(0)
        scores = scores / math.sqrt(self.head_dim)
        probs = torch.softmax(scores, dim=-1)
        ctx = torch.matmul(self.attn_dropout(probs), v)
        ctx = ctx.transpose(0, 1).reshape(t, -1)
        hidden = self.attn_norm(hidden + self.dropout(self.attn_output(ctx)))
        ffn = self.ffn_out(self.act(self.ffn_in(hidden)))
        hidden = self.ffn_norm(hidden + self.dropout(ffn))
        return hidden, probs


class TransformerEncoder(nn.Module):
    """Bidirectional masked-attention encoder over subword ids."""

    def __init__(self, cfg: EncoderConfig) -> None:
        super().__init__()
        self.cfg = cfg
        d = cfg.hidden_dim
        self.word_embeddings = nn.Embedding(cfg.vocab_size, d)
        self.position_embeddings = nn.Embedding(cfg.max_positions, d)
        self.token_type_embeddings = (
            nn.Embedding(cfg.type_vocab_size, d) if cfg.type_vocab_size > 0 else None
        )
        self.embedding_norm = nn.LayerNorm(d, eps=cfg.layer_norm_eps)
        self.embedding_dropout = nn.Dropout(cfg.dropout)
        self.layers = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.num_layers))
        self.apply(self._init_weights)

    @staticmethod
    def _init_weights(module: nn.Module) -> None:
        if isinstance(module, (nn.Linear, nn.Embedding)):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)
            if isinstance(module, nn.Linear) and module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, nn.LayerNorm):
            nn.init.ones_(module.weight)
            nn.init.zeros_(module.bias)

    def forward(
        self,
        ids: torch.Tensor,
        mask: torch.Tensor | None = None,
        collect_attention: bool = False,
    ) -> tuple[torch.Tensor, list[torch.Tensor]]:
        t = ids.shape[0]
        if t > self.cfg.max_positions:
            raise DocumentTooLongError(
                f"sequence of {t} subwords exceeds max_positions={self.cfg.max_positions}"
            )
        positions = torch.arange(t, device=ids.device)
        hidden = self.word_embeddings(ids) + self.position_embeddings(positions)
        if self.token_type_embeddings is not None:
            hidden = hidden + self.token_type_embeddings.weight[0]
        hidden = self.embedding_dropout(self.embedding_norm(hidden))
        attentions = []
        for layer in self.layers:
            hidden, probs = layer(hidden, mask)
            if collect_attention:
                attentions.append(probs.detach())
        return hidden, attentions


@dataclass
class TwoStreamState:
    """Word-level representations from the global and local passes."""

    z_global: torch.Tensor
    z_local: torch.Tensor
    trigger_sentence: int

    def __post_init__(self) -> None:
        if self.z_global.shape != self.z_local.shape:
            raise EncodingError(
                f"stream shapes differ: {tuple(self.z_global.shape)} vs"
                f" {tuple(self.z_local.shape)}"
            )
        for name, z in (("global", self.z_global), ("local", self.z_local)):
            if not torch.isfinite(z).all():
                raise EncodingError(f"non-finite entries in the {name} stream")

    @property
    def num_words(self) -> int:
        return self.z_global.shape[0]

    @property
    def dim(self) -> int:
        return self.z_global.shape[1]


@dataclass
class EncodeTrace:
    """Optional per-pass attention maps for probing and tests."""

    subword_sentence_ids: list[int]
    word_ranges: list[tuple[int, int]] = field(repr=False)
    global_attentions: list[torch.Tensor] = field(repr=False, default_factory=list)
    local_attentions: list[torch.Tensor] = field(repr=False, default_factory=list)


class DocumentEncoder(nn.Module):
    """Runs the shared transformer twice per document and pools to word level."""

    def __init__(self, cfg: EncoderConfig, tokenizer: SubwordTokenizer) -> None:
        super().__init__()
        self.cfg = cfg
        self.tokenizer = tokenizer
        self.transformer = TransformerEncoder(cfg)

    @property
    def dtype(self) -> torch.dtype:
        return self.transformer.word_embeddings.weight.dtype

    def subword_sentence_ids(self, doc: Document, enc: SubwordEncoding) -> list[int]:
        word_sids = doc.word_sentence_ids()
        sids = [GLOBAL_SENTINEL] * len(enc.ids)
        for w, (a, b) in enumerate(enc.word_ranges):
            for pos in range(a, b + 1):
                sids[pos] = word_sids[w]
        return sids

    def encode(
        self,
        doc: Document,
        trigger: Span,
        collect_attention: bool = False,
    ) -> tuple[TwoStreamState, EncodeTrace | None]:
        enc = self.tokenizer.encode_words(doc.words)
        if len(enc.word_ranges) != len(doc):
            raise EncodingError(f"{doc.doc_id}: tokenizer lost word alignment")
        if len(enc.ids) > self.cfg.max_positions:
            raise DocumentTooLongError(
                f"{doc.doc_id}: {len(enc.ids)} subwords exceed"
                f" max_positions={self.cfg.max_positions}; apply the window policy first"
            )
        trigger_sentence = doc.sentence_of_span(trigger)
        sids = self.subword_sentence_ids(doc, enc)
        ids = torch.tensor(enc.ids, dtype=torch.long)
        local_mask = build_local_mask(sids, trigger_sentence, dtype=self.dtype)

        hidden_g, attn_g = self.transformer(ids, None, collect_attention)
        hidden_l, attn_l = self.transformer(ids, local_mask, collect_attention)
        z_global = pool_subwords(hidden_g, enc.word_ranges, self.cfg.subword_pooling)
        z_local = pool_subwords(hidden_l, enc.word_ranges, self.cfg.subword_pooling)
        state = TwoStreamState(z_global, z_local, trigger_sentence)
        trace = None
        if collect_attention:
            trace = EncodeTrace(
                subword_sentence_ids=sids,
                word_ranges=list(enc.word_ranges),
                global_attentions=attn_g,
                local_attentions=attn_l,
            )
        return state, trace


# ---------------------------------------------------------------------------
# Window policies for documents exceeding the position budget.
# ---------------------------------------------------------------------------


def _sentence_subword_lengths(doc: Document, tokenizer: SubwordTokenizer) -> list[int]:
    lengths = []
    for start, end in doc.sentence_bounds:
        lengths.append(sum(tokenizer.num_pieces(doc.words[i - 1]) for i in range(start, end + 1)))
    return lengths


def fit_event(
    doc: Document,
    event: EventInstance,
    tokenizer: SubwordTokenizer,
    cfg: EncoderConfig,
    num_special: int = 2,
) -> tuple[Document, EventInstance, DocumentWindow | None]:
    """Apply the window policy so the document fits the position budget.

    Returns the (possibly windowed) document and event plus the window used,
    or ``None`` when the document already fits.
    """
    lengths = _sentence_subword_lengths(doc, tokenizer)
    budget = cfg.max_positions - num_special
    if sum(lengths) <= budget:
        return doc, event, None
    trigger_sid = doc.sentence_of_span(event.trigger)
    if cfg.window_policy == "truncate":
        kept = []
        used = 0
        for sid, n in enumerate(lengths, start=1):
            if used + n > budget:
                break
            kept.append(sid)
            used += n
        if trigger_sid not in kept:
            raise DocumentTooLongError(
                f"{doc.doc_id}: trigger sentence {trigger_sid} falls outside the"
                " truncation window; use window_policy=trigger_centered"
            )
    else:
        if lengths[trigger_sid - 1] > budget:
            raise DocumentTooLongError(
                f"{doc.doc_id}: trigger sentence alone ({lengths[trigger_sid - 1]}"
                f" subwords) exceeds the position budget {budget}"
            )
        kept = [trigger_sid]
        used = lengths[trigger_sid - 1]
        lo, hi = trigger_sid - 1, trigger_sid + 1
        lo_open = hi_open = True
        while lo_open or hi_open:
            if lo_open:
                if lo >= 1 and used + lengths[lo - 1] <= budget:
                    kept.append(lo)
                    used += lengths[lo - 1]
                    lo -= 1
                else:
                    lo_open = False
            if hi_open:
                if hi <= doc.num_sentences and used + lengths[hi - 1] <= budget:
                    kept.append(hi)
                    used += lengths[hi - 1]
                    hi += 1
                else:
                    hi_open = False
    window = window_document(doc, kept)
    return window.document, window.map_event_to_window(event), window


# ---------------------------------------------------------------------------
# Loading encoders published in the standard BERT checkpoint layout.
# ---------------------------------------------------------------------------

CACHE_ENV_VAR = "DOCARG_CACHE"

_HF_EMBEDDING_MAP = {
    "embeddings.word_embeddings.weight": "word_embeddings.weight",
    "embeddings.position_embeddings.weight": "position_embeddings.weight",
    "embeddings.token_type_embeddings.weight": "token_type_embeddings.weight",
    "embeddings.LayerNorm.weight": "embedding_norm.weight",
    "embeddings.LayerNorm.bias": "embedding_norm.bias",
}

_HF_LAYER_MAP = {
    "attention.self.query": "query",
    "attention.self.key": "key",
    "attention.self.value": "value",
    "attention.output.dense": "attn_output",
    "attention.output.LayerNorm": "attn_norm",
    "intermediate.dense": "ffn_in",
    "output.dense": "ffn_out",
    "output.LayerNorm": "ffn_norm",
}


def resolve_checkpoint(name: str) -> Path:
    """Resolve a checkpoint path directly or inside the cache directory."""
    candidate = Path(name)
    if candidate.is_dir():
        return candidate
    cache = os.environ.get(CACHE_ENV_VAR)
    if cache:
        cached = Path(cache) / name
        if cached.is_dir():
            return cached
    raise ConfigError(
        f"checkpoint {name!r} not found; looked for a directory at {name}"
        + (f" and under ${CACHE_ENV_VAR}={cache}" if cache else f"; set ${CACHE_ENV_VAR}")
    )


def config_from_checkpoint(path: Path, base: EncoderConfig) -> EncoderConfig:
    with open(path / "config.json", "r", encoding="utf-8") as f:
        hf = json.load(f)
    return EncoderConfig(
        checkpoint=str(path),
        hidden_dim=hf["hidden_size"],
        num_layers=hf["num_hidden_layers"],
        num_heads=hf["num_attention_heads"],
        ffn_dim=hf.get("intermediate_size", 4 * hf["hidden_size"]),
        vocab_size=hf["vocab_size"],
        max_positions=hf.get("max_position_embeddings", 512),
        type_vocab_size=hf.get("type_vocab_size", 0),
        layer_norm_eps=hf.get("layer_norm_eps", 1e-12),
        dropout=base.dropout,
        attention_dropout=base.attention_dropout,
        subword_pooling=base.subword_pooling,
        window_policy=base.window_policy,
    )


def _strip_prefix(state: dict[str, torch.Tensor]) -> dict[str, torch.Tensor]:
    for prefix in ("bert.", "roberta.", "encoder."):
        if any(k.startswith(prefix + "embeddings.") for k in state):
            return {k[len(prefix) :]: v for k, v in state.items() if k.startswith(prefix)}
    return state


def load_encoder_state(encoder: TransformerEncoder, path: Path) -> None:
    """Map a published BERT-layout state dict onto the encoder, strictly."""
    weights_file = path / "pytorch_model.bin"
    if not weights_file.exists():
        raise ConfigError(f"no pytorch_model.bin under {path}")
    state = torch.load(weights_file, map_location="cpu", weights_only=True)
    state = _strip_prefix(state)
    mapped: dict[str, torch.Tensor] = {}
    for src, dst in _HF_EMBEDDING_MAP.items():
        if src in state:
            mapped[dst] = state[src]
    for i in range(encoder.cfg.num_layers):
        for src, dst in _HF_LAYER_MAP.items():
            for kind in ("weight", "bias"):
                key = f"encoder.layer.{i}.{src}.{kind}"
                if key not in state:
                    raise ConfigError(f"checkpoint at {path} lacks parameter {key}")
                mapped[f"layers.{i}.{dst}.{kind}"] = state[key]
    missing, unexpected = encoder.load_state_dict(mapped, strict=False)
    real_missing = [k for k in missing if "token_type" not in k]
    if real_missing or unexpected:
        raise ConfigError(
            f"checkpoint at {path} did not cover the encoder: missing={real_missing},"
            f" unexpected={unexpected}"
        )


def load_pretrained_encoder(
    name: str, base: EncoderConfig
) -> tuple[TransformerEncoder, WordPieceTokenizer, EncoderConfig]:
    """Build an encoder plus tokenizer from a published checkpoint directory."""
    path = resolve_checkpoint(name)
    cfg = config_from_checkpoint(path, base)
    encoder = TransformerEncoder(cfg)
    load_encoder_state(encoder, path)
    vocab_file = path / "vocab.txt"
    if not vocab_file.exists():
        raise ConfigError(f"no vocab.txt under {path}")
    lowercase = "uncased" in str(path).lower() or _tokenizer_lowercase(path)
    tokenizer = WordPieceTokenizer.from_file(vocab_file, lowercase=lowercase)
    return encoder, tokenizer, cfg


def _tokenizer_lowercase(path: Path) -> bool:
    cfg_file = path / "tokenizer_config.json"
    if cfg_file.exists():
        with open(cfg_file, "r", encoding="utf-8") as f:
            return bool(json.load(f).get("do_lower_case", False))
    return False
