#!/usr/bin/env python3

import bisect
import logging
import threading
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, List, Optional, Tuple

from registry.models import (
    Asset, Control, Hypothesis, MonitorEvent, RegistrySnapshot, ThreatEvent,
)
from utils.errors import DanglingReference, DuplicateId, InvariantViolation

logger = logging.getLogger('risk_engine.registry')

ACTIONS = ('add', 'update', 'remove')
KINDS = ('asset', 'threat', 'hypothesis', 'control', 'event')

RECORD_TYPES = {
    'asset': Asset,
    'threat': ThreatEvent,
    'hypothesis': Hypothesis,
    'control': Control,
    'event': MonitorEvent,
}


@dataclass(frozen=True)
class Mutation:
    """One registry command.

    ``payload`` is a record for add/update and an id for remove. The
    ``hypothesis`` kind also needs ``parent_id`` (the owning threat event).
    Removing the ``event`` kind prunes every monitor event older than the
    timestamp given as payload; adding it accepts one event or a batch.
    """

    action: str
    kind: str
    payload: Any
    parent_id: Optional[str] = None

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise InvariantViolation(f"unknown registry action {self.action!r}")
        if self.kind not in KINDS:
            raise InvariantViolation(f"unknown record kind {self.kind!r}")


def record_from_dict(kind: str, data: Dict[str, Any]):
    """Build a record of the given kind from a plain dict (CLI and file input)."""
    if kind not in RECORD_TYPES:
        raise InvariantViolation(f"unknown record kind {kind!r}")
    if not isinstance(data, dict):
        raise InvariantViolation(f"{kind} payload must be an object")
    return RECORD_TYPES[kind].from_dict(data)


def validate_references(snapshot: RegistrySnapshot) -> None:
    """Check ids are unique and that every reference resolves.

    Raises:
        DuplicateId: two records of one kind share an id
        DanglingReference: a reference does not resolve
    """
    for label, records in (('asset', snapshot.assets), ('threat event', snapshot.threat_events),
                           ('control', snapshot.controls)):
        seen = set()
        for record in records:
            if record.id in seen:
                raise DuplicateId(f"duplicate {label} id {record.id!r}")
            seen.add(record.id)

    for threat in snapshot.threat_events:
        if snapshot.asset(threat.asset_id) is None:
            raise DanglingReference(f"threat event {threat.id!r} references unknown asset {threat.asset_id!r}")

    for control in snapshot.controls:
        threat = snapshot.threat(control.threat_id)
        if threat is None:
            raise DanglingReference(f"control {control.id!r} targets unknown threat event {control.threat_id!r}")
        if control.hypothesis_id is not None and threat.hypothesis(control.hypothesis_id) is None:
            raise DanglingReference(
                f"control {control.id!r} targets unknown hypothesis {control.hypothesis_id!r} of {threat.id!r}")

    hypothesis_ids = snapshot.hypothesis_ids()
    for event in snapshot.monitor_events:
        if snapshot.asset(event.asset_id) is None:
            raise DanglingReference(f"monitor event at {event.timestamp} references unknown asset {event.asset_id!r}")
        if event.hypothesis_id is not None and event.hypothesis_id not in hypothesis_ids:
            raise DanglingReference(
                f"monitor event at {event.timestamp} references unknown hypothesis {event.hypothesis_id!r}")


def _require(record, record_type, kind: str):
    if not isinstance(record, record_type):
        raise InvariantViolation(f"{kind} payload must be a {record_type.__name__}")
    return record


def _replace_by_id(records: Tuple, record, kind: str) -> Tuple:
    for index, existing in enumerate(records):
        if existing.id == record.id:
            return records[:index] + (record,) + records[index + 1:]
    raise DanglingReference(f"unknown {kind} id {record.id!r}")


def _remove_by_id(records: Tuple, record_id: str, kind: str) -> Tuple:
    remaining = tuple(record for record in records if record.id != record_id)
    if len(remaining) == len(records):
        raise DanglingReference(f"unknown {kind} id {record_id!r}")
    return remaining


def _payload_id(payload: Any) -> str:
    return payload if isinstance(payload, str) else getattr(payload, 'id', payload)


def _insert_events(existing: Tuple[MonitorEvent, ...], new_events: Iterable[MonitorEvent]) -> Tuple:
    events = list(existing)
    timestamps = [event.timestamp for event in events]
    for event in new_events:
        _require(event, MonitorEvent, 'event')
        # Equal timestamps keep arrival order
        position = bisect.bisect_right(timestamps, event.timestamp)
        events.insert(position, event)
        timestamps.insert(position, event.timestamp)
    return tuple(events)


def _mutate_hypothesis(snapshot: RegistrySnapshot, mutation: Mutation) -> Dict[str, Tuple]:
    threat = snapshot.threat(mutation.parent_id) if mutation.parent_id else None
    if threat is None:
        raise DanglingReference(f"hypothesis mutation references unknown threat event {mutation.parent_id!r}")

    hypotheses = threat.hypotheses
    if mutation.action == 'add':
        hypothesis = _require(mutation.payload, Hypothesis, 'hypothesis')
        if threat.hypothesis(hypothesis.id) is not None:
            raise DuplicateId(f"hypothesis {hypothesis.id!r} already exists in {threat.id!r}")
        hypotheses = hypotheses + (hypothesis,)
    elif mutation.action == 'update':
        hypothesis = _require(mutation.payload, Hypothesis, 'hypothesis')
        hypotheses = _replace_by_id(hypotheses, hypothesis, 'hypothesis')
    else:
        hypotheses = _remove_by_id(hypotheses, _payload_id(mutation.payload), 'hypothesis')

    return {'threat_events': _replace_by_id(snapshot.threat_events, threat.replace_hypotheses(hypotheses),
                                            'threat event')}


def mutate_registry(snapshot: RegistrySnapshot, mutation: Mutation) -> RegistrySnapshot:
    """Apply one mutation and return the next snapshot.

    The given snapshot is never modified.

    Args:
        snapshot (RegistrySnapshot): Current snapshot
        mutation (Mutation): Command to apply

    Returns:
        RegistrySnapshot: New snapshot with ``version`` one higher

    Raises:
        DanglingReference: unknown asset, threat, hypothesis or record id
        DuplicateId: an added record's id already exists
        InvariantViolation: the payload breaks a type invariant
    """
    action, kind = mutation.action, mutation.kind
    fields_by_kind = {'asset': 'assets', 'threat': 'threat_events', 'control': 'controls'}

    if kind == 'hypothesis':
        changes = _mutate_hypothesis(snapshot, mutation)
    elif kind == 'event':
        if action == 'add':
            payload = mutation.payload
            batch = list(payload) if isinstance(payload, (list, tuple)) else [payload]
            changes = {'monitor_events': _insert_events(snapshot.monitor_events, batch)}
        elif action == 'remove':
            try:
                cutoff = float(mutation.payload)
            except (TypeError, ValueError):
                raise InvariantViolation("event removal needs a cutoff timestamp")
            changes = {'monitor_events': tuple(event for event in snapshot.monitor_events
                                               if event.timestamp >= cutoff)}
        else:
            raise InvariantViolation("monitor events are append-only and cannot be updated")
    else:
        field_name = fields_by_kind[kind]
        records = getattr(snapshot, field_name)
        if action == 'add':
            record = _require(mutation.payload, RECORD_TYPES[kind], kind)
            if any(existing.id == record.id for existing in records):
                raise DuplicateId(f"{kind} id {record.id!r} already exists")
            records = records + (record,)
        elif action == 'update':
            record = _require(mutation.payload, RECORD_TYPES[kind], kind)
            records = _replace_by_id(records, record, kind)
        else:
            records = _remove_by_id(records, _payload_id(mutation.payload), kind)
        changes = {field_name: records}

    candidate = replace(snapshot, version=snapshot.version + 1, **changes)
    validate_references(candidate)
    logger.debug(f"Applied {action} {kind}; registry now at version {candidate.version}")
    return candidate


def detect_change(prev: Optional[RegistrySnapshot], next_snapshot: RegistrySnapshot) -> bool:
    """Return True when the two snapshots differ in content."""
    if prev is None:
        return True
    return prev.content_digest != next_snapshot.content_digest


class Registry:
    """Mutable handle over a sequence of snapshots with a single writer path."""

    def __init__(self, snapshot: Optional[RegistrySnapshot] = None):
        """Initialize the registry handle.

        Args:
            snapshot (Optional[RegistrySnapshot]): Starting snapshot, empty by default
        """
        self.logger = logging.getLogger('risk_engine.registry')
        self._snapshot = snapshot if snapshot is not None else RegistrySnapshot()
        self._write_lock = threading.Lock()
        self._last_timestamp: Dict[str, float] = {}

    @property
    def snapshot(self) -> RegistrySnapshot:
        return self._snapshot

    def apply(self, mutation: Mutation) -> RegistrySnapshot:
        """Apply a mutation through the writer lock and publish the result."""
        with self._write_lock:
            self._snapshot = mutate_registry(self._snapshot, mutation)
            return self._snapshot

    def apply_all(self, mutations: Iterable[Mutation]) -> RegistrySnapshot:
        """Apply mutations in order; on failure nothing is published."""
        with self._write_lock:
            snapshot = self._snapshot
            for mutation in mutations:
                snapshot = mutate_registry(snapshot, mutation)
            self._snapshot = snapshot
            return snapshot

    def adopt(self, snapshot: RegistrySnapshot) -> RegistrySnapshot:
        """Replace the content with a validated snapshot loaded elsewhere.

        The published version still moves past the current one.
        """
        validate_references(snapshot)
        with self._write_lock:
            version = max(snapshot.version, self._snapshot.version + 1)
            self._snapshot = replace(snapshot, version=version)
            return self._snapshot

    def ingest(self, events: List[MonitorEvent], source: str = 'default') -> RegistrySnapshot:
        """Append a batch of monitor events from one source as a single mutation.

        Timestamps within a source must not go backwards.

        Raises:
            InvariantViolation: a timestamp precedes the source's previous event
        """
        if not events:
            return self._snapshot

        with self._write_lock:
            last = self._last_timestamp.get(source, float('-inf'))
            for event in events:
                if event.timestamp < last:
                    raise InvariantViolation(
                        f"event from {source!r} at {event.timestamp} precedes previous event at {last}")
                last = event.timestamp

            self._snapshot = mutate_registry(self._snapshot, Mutation('add', 'event', tuple(events)))
            self._last_timestamp[source] = last
            self.logger.debug(f"Ingested {len(events)} events from {source}")
            return self._snapshot
