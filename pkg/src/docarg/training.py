"""Training loop, checkpointing, and corpus-level prediction/evaluation."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .config import RunConfig
from .corpus import Corpus, Schema
from .errors import ConfigError, DocargError
from .fusion_head import EventPrediction, event_loss
from .metrics import coref_f1, evaluate_all, head_f1, span_f1
from .model import ArgumentExtractor, PreparedEvent
from .twostream import tokenizer_from_payload, tokenizer_to_payload

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1


def set_seed(seed: int) -> None:
    random.seed(seed)
    torch.manual_seed(seed)
    try:
        import numpy as np

        np.random.seed(seed % 2**32)
    except ImportError:  # pragma: no cover - numpy is a hard dependency anyway
        pass


_SELECTION = {"span_f1": span_f1, "head_f1": head_f1, "coref_f1": coref_f1}


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    classification_loss: float
    boundary_loss: float
    dev_f1: float | None = None

    def as_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "classification_loss": self.classification_loss,
            "boundary_loss": self.boundary_loss,
            "dev_f1": self.dev_f1,
        }


@dataclass
class TrainingLog:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None
    best_dev_f1: float | None = None
    stopped_early: bool = False

    def as_dict(self) -> dict:
        return {
            "epochs": [e.as_dict() for e in self.epochs],
            "best_epoch": self.best_epoch,
            "best_dev_f1": self.best_dev_f1,
            "stopped_early": self.stopped_early,
        }


def predict_corpus(
    model: ArgumentExtractor,
    corpus: Corpus,
    prepared: list[PreparedEvent] | None = None,
) -> list[EventPrediction]:
    if prepared is None:
        prepared = model.prepare_corpus(corpus)
    return [model.predict_event(prep) for prep in prepared]


def evaluate_corpus(
    model: ArgumentExtractor,
    corpus: Corpus,
    head_fallback_to_span_end: bool = False,
) -> tuple[dict, list[EventPrediction]]:
    predictions = predict_corpus(model, corpus)
    report = evaluate_all(
        corpus, predictions, head_fallback_to_span_end=head_fallback_to_span_end
    )
    return report, predictions


class Trainer:
    """Mini-batch gradient training with dev-set model selection.

    Losses are summed over the events of each batch and backpropagated in one
    optimizer step. The checkpoint with the best dev score (under the
    configured selection metric) is kept alongside the final weights.
    """

    def __init__(
        self,
        model: ArgumentExtractor,
        config: RunConfig,
        train_corpus: Corpus,
        dev_corpus: Corpus | None = None,
        out_dir: str | Path | None = None,
    ) -> None:
        self.model = model
        self.config = config
        self.train_corpus = train_corpus
        self.dev_corpus = dev_corpus
        self.out_dir = Path(out_dir) if out_dir is not None else None
        if self.out_dir is not None:
            (self.out_dir / "checkpoints").mkdir(parents=True, exist_ok=True)

    def _dev_score(self) -> float:
        assert self.dev_corpus is not None
        predictions = predict_corpus(self.model, self.dev_corpus)
        metric = _SELECTION[self.config.training.selection_metric]
        if metric is head_f1:
            fallback = any(doc.dep_parents is None for doc, _ in self.dev_corpus)
            return metric(self.dev_corpus, predictions, fallback_to_span_end=fallback).f1
        return metric(self.dev_corpus, predictions).f1

    def train(self) -> TrainingLog:
        cfg = self.config.training
        set_seed(cfg.seed)
        prepared = self.model.prepare_corpus(self.train_corpus)
        if not prepared:
            raise ConfigError("training corpus contains no events")
        unreachable = sum(p.unreachable_gold for p in prepared)
        if unreachable:
            logger.warning(
                "%d gold arguments have no candidate span (too long or crossing"
                " a sentence) and only supervise the boundary scorers",
                unreachable,
            )
        optimizer_cls = {"adam": torch.optim.Adam, "adamw": torch.optim.AdamW}[cfg.optimizer]
        optimizer = optimizer_cls(
            self.model.parameters(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay
        )
        order_rng = random.Random(cfg.seed)
        log = TrainingLog()
        for epoch in range(1, cfg.epochs + 1):
            self.model.train()
            if cfg.shuffle:
                order_rng.shuffle(prepared)
            epoch_total = epoch_cls = epoch_bnd = 0.0
            for batch_start in range(0, len(prepared), cfg.batch_size):
                batch = prepared[batch_start : batch_start + cfg.batch_size]
                optimizer.zero_grad()
                batch_loss = None
                for prep in batch:
                    output, _ = self.model.forward_event(prep)
                    loss, parts = event_loss(
                        output,
                        prep.role_targets,
                        prep.start_targets,
                        prep.end_targets,
                        boundary_weight=self.config.head.boundary_weight,
                        use_boundary_loss=self.config.ablation.use_boundary_loss,
                    )
                    batch_loss = loss if batch_loss is None else batch_loss + loss
                    epoch_cls += parts.classification
                    epoch_bnd += parts.boundary
                assert batch_loss is not None
                if not torch.isfinite(batch_loss):
                    raise DocargError(
                        f"training diverged: non-finite loss at epoch {epoch};"
                        " the last best checkpoint (if any) is kept under"
                        " checkpoints/best.pt — consider a lower learning rate"
                        " or smaller batch size"
                    )
                batch_loss.backward()
                if cfg.max_grad_norm is not None:
                    torch.nn.utils.clip_grad_norm_(
                        self.model.parameters(), cfg.max_grad_norm
                    )
                optimizer.step()
                epoch_total += float(batch_loss.item())
            record = EpochRecord(
                epoch=epoch,
                train_loss=epoch_total,
                classification_loss=epoch_cls,
                boundary_loss=epoch_bnd,
            )
            if self.dev_corpus is not None:
                record.dev_f1 = self._dev_score()
            log.epochs.append(record)
            if record.dev_f1 is not None and (
                log.best_dev_f1 is None or record.dev_f1 > log.best_dev_f1
            ):
                log.best_dev_f1 = record.dev_f1
                log.best_epoch = epoch
                if self.out_dir is not None:
                    save_checkpoint(
                        self.out_dir / "checkpoints" / "best.pt",
                        self.model,
                        self.config,
                        log=log,
                    )
            logger.info(
                "epoch %d: loss=%.4f (cls=%.4f, boundary=%.4f)%s",
                epoch,
                record.train_loss,
                record.classification_loss,
                record.boundary_loss,
                "" if record.dev_f1 is None else f" dev_f1={record.dev_f1:.4f}",
            )
            if (
                cfg.early_stop_f1 is not None
                and record.dev_f1 is not None
                and record.dev_f1 >= cfg.early_stop_f1
            ):
                log.stopped_early = True
                break
        if self.out_dir is not None:
            save_checkpoint(
                self.out_dir / "checkpoints" / "final.pt", self.model, self.config, log=log
            )
            if self.dev_corpus is None:
                save_checkpoint(
                    self.out_dir / "checkpoints" / "best.pt", self.model, self.config, log=log
                )
        return log


def save_checkpoint(
    path: str | Path,
    model: ArgumentExtractor,
    config: RunConfig,
    log: TrainingLog | None = None,
) -> None:
    torch.save(
        {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "config": config.to_dict(),
            "schema": model.schema.to_dict(),
            "tokenizer": tokenizer_to_payload(model.tokenizer),
            "dev_history": log.as_dict() if log is not None else None,
            "state_dict": model.state_dict(),
        },
        path,
    )


def checkpoint_info(path: str | Path) -> dict:
    """Checkpoint metadata (config, schema, dev history) without the weights."""
    payload = torch.load(path, map_location="cpu", weights_only=False)
    return {
        "format_version": payload.get("format_version"),
        "config": payload.get("config"),
        "schema": payload.get("schema"),
        "dev_history": payload.get("dev_history"),
    }


def load_checkpoint(path: str | Path) -> ArgumentExtractor:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ConfigError(
            f"checkpoint {path} has format_version {version},"
            f" expected {CHECKPOINT_FORMAT_VERSION}"
        )
    config = RunConfig.from_dict(payload["config"])
    schema = Schema.from_dict(payload["schema"])
    tokenizer = tokenizer_from_payload(payload["tokenizer"])
    # the saved state dict has every weight; don't re-resolve the original
    # pretrained directory, which may not exist on this machine
    pretrained_name = config.encoder.checkpoint
    config.encoder.checkpoint = None
    model = ArgumentExtractor(config, schema, tokenizer=tokenizer)
    config.encoder.checkpoint = pretrained_name
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
