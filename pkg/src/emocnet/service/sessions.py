"""Session state machine with an append-only event log.

Each session persists as one JSONL file of events (created, batch-issued,
labels-accepted, update-finished). Replaying the log reproduces the exact
in-memory state because every stochastic step draws from generators derived
from the session seed and a fixed step counter; a torn trailing line (crash
mid-append) is ignored, so a restart lands on the last complete event.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path


from ..data import SyntheticSpec, load_cifar100_dataset, synthetic_dataset
from ..network import Network, expand_final_classifier
from ..protocol import (
    ExperimentRecord,
    ProtocolConfig,
    _initial_model,
    _STREAM_SELECT,
    _STREAM_UPDATE,
    build_protocol,
    derived_rng,
    evaluate,
)
from ..selection import CandidateSet, SelectionConfig, Strategy, select_batch
from ..training import (
    LossKind,
    OptimizerState,
    RegularizerConfig,
    TrainingConfig,
    continual_update,
)

_STREAM_WIDEN = 101


class SessionError(Exception):
    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.code = code
        self.message = message


class SessionStatus(str, Enum):
    IDLE = "idle"
    SCORING = "scoring"
    AWAITING_LABELS = "awaiting_labels"
    UPDATING = "updating"


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class OutstandingBatch:
    batch_id: str
    sample_ids: list[int]
    suggested_label: int
    round_index: int
    issued_at: str


@dataclass
class Session:
    session_id: str
    name: str | None
    created_at: str
    seed: int
    request: dict
    protocol_cfg: ProtocolConfig
    training_cfg: TrainingConfig
    selection_cfg: SelectionConfig
    net: Network
    opt_state: OptimizerState
    parts: object
    class_registry: dict[int, str]
    status: SessionStatus = SessionStatus.IDLE
    outstanding: OutstandingBatch | None = None
    history: list[ExperimentRecord] = field(default_factory=list)
    rounds_done: int = 0
    consumed_batch_ids: set = field(default_factory=set)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def labeled(self):
        return self.parts.initial

    @property
    def pool(self):
        return self.parts.pool

    def state_digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.status.value.encode())
        h.update(self.net.theta.tobytes())
        h.update(json.dumps(sorted(self.class_registry.items())).encode())
        h.update(json.dumps(sorted(
            (s.id, s.assigned_label) for s in self.labeled)).encode())
        h.update(json.dumps(self.pool.ids()).encode())
        h.update(str(len(self.history)).encode())
        if self.outstanding is not None:
            h.update(self.outstanding.batch_id.encode())
        return h.hexdigest()

    def record_point(self) -> ExperimentRecord:
        if self.parts.test:
            acc, discovered = evaluate(self.net, self.parts.test, self.labeled)
        else:
            acc, discovered = float("nan"), len(self.labeled.classes())
        return ExperimentRecord(
            strategy=self.selection_cfg.strategy.value, seed=self.seed,
            labeled_count=len(self.labeled), accuracy_pct=acc,
            discovered_classes=discovered,
        )


def _dataset_from_ref(ref: dict):
    if ref.get("synthetic"):
        block = dict(ref["synthetic"])
        test_per_class = int(block.pop("test_per_class", 20))
        return synthetic_dataset(SyntheticSpec(**block), test_per_class)
    if ref.get("cifar"):
        return load_cifar100_dataset(ref["cifar"]["directory"])
    raise SessionError(400, "bad_dataset", "dataset reference must name "
                       "a synthetic spec or a CIFAR directory")


def _configs_from_request(request: dict):
    try:
        protocol = ProtocolConfig(**request.get("protocol", {}))
        training = TrainingConfig(**request.get("training", {}),
                                  rng_seed=int(request.get("seed", 0)))
        sel = dict(request.get("selection", {}))
        if "strategy" in sel:
            sel["strategy"] = Strategy(sel["strategy"])
        selection = SelectionConfig(**sel, rng_seed=int(request.get("seed", 0)))
    except (TypeError, ValueError) as exc:
        raise SessionError(400, "bad_config", str(exc)) from exc
    return protocol, training, selection


class SessionStore:
    """Creates, persists, and replays sessions under one state directory."""

    def __init__(self, state_dir):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self._store_lock = threading.Lock()
        for log in sorted(self.state_dir.glob("*.events.jsonl")):
            session = self._replay(log)
            if session is not None:
                self.sessions[session.session_id] = session

    # -- event log ---------------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self.state_dir / f"{session_id}.events.jsonl"

    def _append_event(self, session_id: str, kind: str, payload: dict) -> None:
        event = {"kind": kind, "at": utc_now(), **payload}
        line = json.dumps(event, sort_keys=True) + "\n"
        with open(self._log_path(session_id), "a", encoding="utf-8") as f:
            f.write(line)
            f.flush()
            os.fsync(f.fileno())

    @staticmethod
    def _read_events(path: Path) -> list[dict]:
        events = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                try:
                    events.append(json.loads(line))
                except json.JSONDecodeError:
                    break  # torn trailing write; everything after is invalid
        return events

    # -- session construction ----------------------------------------------

    def _build_session(self, session_id: str, created_at: str,
                       request: dict) -> Session:
        protocol_cfg, training_cfg, selection_cfg = _configs_from_request(request)
        data = _dataset_from_ref(request.get("dataset", {}))
        seed = int(request.get("seed", 0))
        try:
            parts = build_protocol(data, protocol_cfg, seed)
        except ValueError as exc:
            raise SessionError(400, "bad_protocol", str(exc)) from exc
        if selection_cfg.set_size > len(parts.pool):
            raise SessionError(
                400, "bad_selection",
                f"set_size {selection_cfg.set_size} exceeds pool size "
                f"{len(parts.pool)}",
            )
        loss = LossKind.SOFTMAX_CROSS_ENTROPY
        reg = RegularizerConfig()
        net, opt_state = _initial_model(parts, training_cfg,
                                        request.get("architecture"), loss,
                                        reg, seed)
        session = Session(
            session_id=session_id, name=request.get("name"),
            created_at=created_at, seed=seed, request=request,
            protocol_cfg=protocol_cfg, training_cfg=training_cfg,
            selection_cfg=selection_cfg, net=net, opt_state=opt_state,
            parts=parts,
            class_registry={i: f"class-{i}" for i in range(parts.num_classes)},
        )
        session.history.append(session.record_point())
        return session

    def create(self, request: dict) -> Session:
        session_id = uuid.uuid4().hex[:12]
        created_at = utc_now()
        session = self._build_session(session_id, created_at, request)
        with self._store_lock:
            self._append_event(session_id, "created",
                               {"session_id": session_id,
                                "created_at": created_at,
                                "request": request})
            self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise SessionError(404, "unknown_session",
                               f"no session {session_id!r}")
        return session

    # -- state transitions ---------------------------------------------------

    def issue_batch(self, session: Session) -> OutstandingBatch:
        """Idle -> Scoring -> AwaitingLabels; idempotent while awaiting."""
        if session.outstanding is not None:
            return session.outstanding
        if session.status is not SessionStatus.IDLE:
            raise SessionError(409, "wrong_state",
                               f"cannot issue a batch while {session.status.value}")
        if len(session.pool) == 0:
            raise SessionError(410, "pool_exhausted",
                               "the unlabeled pool is exhausted")
        session.status = SessionStatus.SCORING
        try:
            round_index = session.rounds_done + 1
            rng = derived_rng(session.seed, _STREAM_SELECT, round_index)
            scored = select_batch(session.net, session.pool,
                                  session.selection_cfg, rng=rng)
            chosen: CandidateSet = scored.selected
            suggested = chosen.hypothesized_label
            if suggested is None:
                from ..selection import map_label
                suggested = map_label(session.net, chosen.sample_ids, session.pool)
            batch = OutstandingBatch(
                batch_id=f"{session.session_id}-b{round_index:04d}",
                sample_ids=list(chosen.sample_ids),
                suggested_label=int(suggested),
                round_index=round_index,
                issued_at=utc_now(),
            )
            self._append_event(session.session_id, "batch-issued", {
                "batch_id": batch.batch_id,
                "sample_ids": batch.sample_ids,
                "suggested_label": batch.suggested_label,
                "round_index": batch.round_index,
            })
            session.outstanding = batch
            return batch
        finally:
            session.status = (SessionStatus.AWAITING_LABELS
                              if session.outstanding else SessionStatus.IDLE)

    def accept_labels(self, session: Session, batch_id: str,
                      labels: list[dict]) -> dict:
        """AwaitingLabels -> Updating -> Idle.

        ``labels`` entries carry ``sample_id`` plus either ``class_id`` or
        ``new_class_name``. The event is persisted (with resolved new-class
        ids) before any state changes, so a crash replays to the post-submit
        state; a crash before the append leaves the pre-submit state.
        """
        batch = session.outstanding
        if batch is None or batch_id in session.consumed_batch_ids:
            raise SessionError(409, "stale_batch",
                               f"batch {batch_id!r} is not outstanding")
        if batch_id != batch.batch_id:
            raise SessionError(409, "stale_batch",
                               f"batch {batch_id!r} is not outstanding")
        expected = set(batch.sample_ids)
        got = [entry["sample_id"] for entry in labels]
        if set(got) != expected or len(got) != len(expected):
            raise SessionError(422, "partial_labels",
                               "labels must cover every sample of the batch "
                               "exactly once")
        new_names = []
        for entry in labels:
            name = entry.get("new_class_name")
            if name is None and entry.get("class_id") is None:
                raise SessionError(422, "partial_labels",
                                   f"sample {entry['sample_id']} has no label")
            if name is not None and name not in new_names \
                    and name not in session.class_registry.values():
                new_names.append(name)
            if entry.get("class_id") is not None \
                    and entry["class_id"] not in session.class_registry:
                raise SessionError(422, "unknown_class",
                                   f"class id {entry['class_id']} not in registry")
        next_id = max(session.class_registry) + 1 if session.class_registry else 0
        new_classes = {next_id + i: name for i, name in enumerate(new_names)}
        self._append_event(session.session_id, "labels-accepted", {
            "batch_id": batch_id,
            "labels": labels,
            "new_classes": {str(k): v for k, v in new_classes.items()},
        })
        record = self._apply_labels(session, batch_id, labels, new_classes)
        self._append_event(session.session_id, "update-finished", {
            "batch_id": batch_id,
            "record": dataclasses.asdict(record),
        })
        return {"record": record, "new_classes": new_classes}

    def _apply_labels(self, session: Session, batch_id: str,
                      labels: list[dict], new_classes: dict[int, str]):
        batch = session.outstanding
        session.status = SessionStatus.UPDATING
        try:
            name_to_id = {v: k for k, v in session.class_registry.items()}
            for class_id, name in new_classes.items():
                session.class_registry[class_id] = name
                name_to_id[name] = class_id
                session.net, session.opt_state.velocity = expand_final_classifier(
                    session.net, 1,
                    rng=derived_rng(session.seed, _STREAM_WIDEN, class_id),
                    velocity=session.opt_state.velocity,
                )
            resolved = {}
            for entry in labels:
                if entry.get("new_class_name") is not None:
                    resolved[entry["sample_id"]] = name_to_id[entry["new_class_name"]]
                else:
                    resolved[entry["sample_id"]] = int(entry["class_id"])
            taken = session.pool.take(batch.sample_ids)
            old_pairs = session.labeled.as_pairs()
            for s in taken:
                session.labeled.add(s, label=resolved[s.id])
            continual_update(
                session.net, session.opt_state, old_pairs,
                [(s.features, s.assigned_label) for s in taken],
                session.training_cfg, LossKind.SOFTMAX_CROSS_ENTROPY,
                RegularizerConfig(),
                rng=derived_rng(session.seed, _STREAM_UPDATE, batch.round_index),
            )
            record = session.record_point()
            session.history.append(record)
            session.rounds_done = batch.round_index
            session.consumed_batch_ids.add(batch_id)
            session.outstanding = None
            return record
        finally:
            session.status = SessionStatus.IDLE

    # -- replay --------------------------------------------------------------

    def _replay(self, log_path: Path) -> Session | None:
        events = self._read_events(log_path)
        if not events or events[0].get("kind") != "created":
            return None
        head = events[0]
        session = self._build_session(head["session_id"], head["created_at"],
                                      head["request"])
        for event in events[1:]:
            kind = event.get("kind")
            if kind == "batch-issued":
                session.outstanding = OutstandingBatch(
                    batch_id=event["batch_id"],
                    sample_ids=[int(i) for i in event["sample_ids"]],
                    suggested_label=int(event["suggested_label"]),
                    round_index=int(event["round_index"]),
                    issued_at=event["at"],
                )
                session.status = SessionStatus.AWAITING_LABELS
            elif kind == "labels-accepted":
                new_classes = {int(k): v
                               for k, v in event.get("new_classes", {}).items()}
                self._apply_labels(session, event["batch_id"], event["labels"],
                                   new_classes)
            elif kind == "update-finished":
                pass  # state already reproduced by labels-accepted
        return session
