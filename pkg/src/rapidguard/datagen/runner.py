"""Checkpointed multi-worker dataset generation.

The (intent x technique) index space is partitioned round-robin across
workers; each worker walks its slice in increasing index order and the
checkpoint stores every worker's last completed index. Resuming from a
checkpoint therefore continues exactly where each worker stopped:
no sample is ever emitted twice and none is skipped, and because sample
content depends only on (intent, technique, seed), the emitted set is
identical for any worker count.

Checkpoint updates are atomic (write to a temp file, then rename), so
a crash mid-write leaves the previous consistent checkpoint in place.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .techniques import (
    CorruptCheckpoint,
    GeneratedSample,
    Intent,
    TechniqueRegistry,
    builtin_registry,
)


@dataclass
class Checkpoint:
    run_id: str
    seed: int
    workers: int
    intent_ids: list[str]
    technique_ids: list[str]
    cursors: dict[int, int]  # worker -> last completed global index
    completed: int

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "seed": self.seed,
            "workers": self.workers,
            "intent_ids": self.intent_ids,
            "technique_ids": self.technique_ids,
            "cursors": {str(w): c for w, c in self.cursors.items()},
            "completed": self.completed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Checkpoint":
        try:
            return cls(
                run_id=data["run_id"],
                seed=data["seed"],
                workers=data["workers"],
                intent_ids=list(data["intent_ids"]),
                technique_ids=list(data["technique_ids"]),
                cursors={int(w): c for w, c in data["cursors"].items()},
                completed=data["completed"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptCheckpoint(f"malformed checkpoint: {exc}") from exc


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        return Checkpoint.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise CorruptCheckpoint(f"checkpoint is not valid JSON: {exc}") from exc


def _write_checkpoint(checkpoint: Checkpoint, path: Path) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(checkpoint.to_dict(), indent=2), encoding="utf-8")
    os.replace(tmp, path)


class StopGeneration(Exception):
    """Internal signal used to abandon a run mid-flight (tests use it to
    simulate a crash; the checkpoint stays consistent)."""


def generate_dataset(
    intents: Sequence[Intent],
    technique_ids: Sequence[str],
    seed: int,
    workers: int = 1,
    registry: TechniqueRegistry | None = None,
    checkpoint_path: str | Path | None = None,
    resume: Checkpoint | None = None,
    emit: Callable[[GeneratedSample], None] | None = None,
    kb=None,
    run_id: str = "run",
    stop_after: int | None = None,
) -> tuple[list[GeneratedSample], Checkpoint]:
    """Produce |intents| x |technique_ids| samples exactly once.

    emit is called per fresh sample (streaming output); the returned
    list holds the same samples. With kb set, samples are upserted as
    generated prompts carrying a malicious source label. stop_after
    aborts the run after that many new samples, leaving the checkpoint
    consistent for resumption.
    """
    if not intents:
        raise ValueError("intents must be non-empty")
    registry = registry or builtin_registry()
    plugins = [registry.get(tid) for tid in technique_ids]  # UnknownTechnique early
    if workers < 1:
        raise ValueError("workers must be >= 1")

    intent_ids = [i.intent_id for i in intents]
    tech_ids = list(technique_ids)
    if resume is not None:
        expected = (resume.intent_ids, resume.technique_ids, resume.seed, resume.workers)
        actual = (intent_ids, tech_ids, seed, workers)
        if expected != actual:
            raise CorruptCheckpoint(
                "checkpoint does not match this run "
                f"(checkpoint={expected}, run={actual})"
            )
        cursors = dict(resume.cursors)
        completed = resume.completed
    else:
        cursors = {w: -1 for w in range(workers)}
        completed = 0

    checkpoint = Checkpoint(
        run_id=run_id,
        seed=seed,
        workers=workers,
        intent_ids=intent_ids,
        technique_ids=tech_ids,
        cursors=cursors,
        completed=completed,
    )
    path = Path(checkpoint_path) if checkpoint_path is not None else None

    total = len(intents) * len(plugins)
    lock = threading.Lock()
    out: list[GeneratedSample] = []
    emitted = {"n": 0}
    stop = threading.Event()
    errors: list[BaseException] = []

    def run_worker(w: int) -> None:
        try:
            for g in range(w, total, workers):
                if stop.is_set():
                    return
                if g <= checkpoint.cursors[w]:
                    continue  # already completed before resume
                intent = intents[g // len(plugins)]
                plugin = plugins[g % len(plugins)]
                sample = plugin.transform(intent, seed)
                with lock:
                    if stop.is_set():
                        return
                    if kb is not None:
                        _record_sample(kb, sample)
                    if emit is not None:
                        emit(sample)
                    out.append(sample)
                    checkpoint.cursors[w] = g
                    checkpoint.completed += 1
                    emitted["n"] += 1
                    if path is not None:
                        _write_checkpoint(checkpoint, path)
                    if stop_after is not None and emitted["n"] >= stop_after:
                        stop.set()
        except BaseException as exc:  # surface worker crashes to the caller
            errors.append(exc)
            stop.set()

    if workers == 1:
        run_worker(0)
    else:
        threads = [
            threading.Thread(target=run_worker, args=(w,), name=f"datagen-{w}")
            for w in range(workers)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    if errors:
        raise errors[0]
    if path is not None:
        _write_checkpoint(checkpoint, path)
    return out, checkpoint


def _record_sample(kb, sample: GeneratedSample) -> None:
    from ..knowledgebase import LabelObservation

    record = kb.upsert_prompt(
        sample.user_text(),
        source="generated",
        provenance={
            "technique_id": sample.technique_id,
            "sample_id": sample.sample_id,
            "seed": sample.seed,
        },
    )
    kb.record_observation(
        LabelObservation(
            prompt_id=record.prompt_id,
            labeler_kind="source_dataset",
            labeler_name=f"datagen:{sample.technique_id}",
            label="malicious",
            category=sample.harm_category,
            confidence=1.0,
            observed_at="",
        )
    )
