#!/usr/bin/env python3

"""Continuous assessment loop.

Each tick pulls new monitor events, appends them to the registry through its
single writer, and emits exactly one report for the current snapshot. Changes
arriving between two ticks therefore coalesce into one re-assessment, and a
quiet registry produces content-identical reports.
"""

import logging
import os
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Union

from assessment.engine import AssessmentConfig, ResidualReport, evaluate
from assessment.fair import RiskReport
from registry.models import MonitorEvent, RegistrySnapshot
from registry.persistence import load, persist
from registry.store import Registry, detect_change

logger = logging.getLogger('risk_engine.watch')


@dataclass(frozen=True)
class SourceFailure:
    """An event source error reported in the report stream."""

    message: str
    timestamp: float
    kind: str = field(default='failure', init=False)

    def to_dict(self):
        return {'kind': self.kind, 'message': self.message, 'timestamp': self.timestamp}


WatchItem = Union[RiskReport, ResidualReport, SourceFailure]


class Clock(ABC):
    @abstractmethod
    def now(self) -> float:
        pass

    @abstractmethod
    def sleep(self, seconds: float, stop_event: threading.Event) -> bool:
        """Wait up to ``seconds``; return True when a stop was requested."""
        pass


class WallClock(Clock):
    def now(self) -> float:
        return time.time()

    def sleep(self, seconds: float, stop_event: threading.Event) -> bool:
        return stop_event.wait(seconds)


class SimulatedClock(Clock):
    """Simulated seconds that advance only when the loop sleeps."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def sleep(self, seconds: float, stop_event: threading.Event) -> bool:
        self._now += seconds
        return stop_event.is_set()


class EventSource(ABC):
    name = 'source'

    @abstractmethod
    def poll(self, now: float) -> List[MonitorEvent]:
        """Return the events observed since the previous poll, up to ``now``."""
        pass


class NullSource(EventSource):
    name = 'none'

    def poll(self, now: float) -> List[MonitorEvent]:
        return []


class ReplaySource(EventSource):
    """Releases a pre-generated, time-ordered event stream as the clock passes each timestamp."""

    name = 'replay'

    def __init__(self, events: Sequence[MonitorEvent], offset: float = 0.0):
        self._events = list(events)
        self._position = 0
        self.offset = offset

    @property
    def exhausted(self) -> bool:
        return self._position >= len(self._events)

    def poll(self, now: float) -> List[MonitorEvent]:
        start = self._position
        while self._position < len(self._events) and self._events[self._position].timestamp + self.offset <= now:
            self._position += 1
        batch = self._events[start:self._position]
        if self.offset:
            batch = [MonitorEvent(event.timestamp + self.offset, event.dimension, event.asset_id,
                                  event.hypothesis_id, event.severity, event.payload) for event in batch]
        return batch


class RegistryFile:
    """Keeps a registry handle and its file in step across watch ticks.

    External edits to the file are adopted; ingested events are written back.
    """

    def __init__(self, path: str):
        self.logger = logging.getLogger('risk_engine.watch.file')
        self.path = path
        self._stamp = self._file_stamp()
        self._digest: Optional[str] = None

    def _file_stamp(self):
        try:
            stat = os.stat(self.path)
            return stat.st_mtime_ns, stat.st_size
        except OSError:
            return None

    def refresh(self, registry: Registry) -> bool:
        """Adopt the file content when it changed on disk; return True if adopted."""
        stamp = self._file_stamp()
        if stamp == self._stamp:
            return False
        self._stamp = stamp
        snapshot = load(self.path)
        if snapshot.content_digest == registry.snapshot.content_digest:
            return False
        registry.adopt(snapshot)
        self.logger.info(f"Registry file {self.path} changed; adopted as version {registry.snapshot.version}")
        return True

    def save(self, registry: Registry) -> None:
        snapshot = registry.snapshot
        if snapshot.content_digest == self._digest:
            return
        persist(snapshot, self.path)
        self._digest = snapshot.content_digest
        self._stamp = self._file_stamp()


class RiskWatcher:
    """Runs the assessment loop over a registry and an event source."""

    def __init__(self, registry: Registry, source: EventSource, config: AssessmentConfig,
                 clock: Optional[Clock] = None, stop_event: Optional[threading.Event] = None,
                 registry_file: Optional[RegistryFile] = None):
        """Initialize the watcher.

        Args:
            registry (Registry): Registry handle; ingestion goes through its writer
            source (EventSource): Monitor event source
            config (AssessmentConfig): Assessment settings, including the poll interval
            clock (Optional[Clock]): Time source, wall clock by default
            stop_event (Optional[threading.Event]): Set to stop the loop cleanly
            registry_file (Optional[RegistryFile]): File kept in step with the registry
        """
        self.logger = logging.getLogger('risk_engine.watch')
        self.registry = registry
        self.source = source
        self.config = config
        self.clock = clock or WallClock()
        self.stop_event = stop_event or threading.Event()
        self.registry_file = registry_file
        self._assessing = threading.Lock()
        self._last_snapshot: Optional[RegistrySnapshot] = None

    def stop(self) -> None:
        self.stop_event.set()

    def _collect(self) -> Optional[SourceFailure]:
        now = self.clock.now()
        try:
            if self.registry_file is not None:
                self.registry_file.refresh(self.registry)
            events = self.source.poll(now)
            if events:
                self.registry.ingest(events, source=self.source.name)
            if self.registry_file is not None:
                self.registry_file.save(self.registry)
        except Exception as e:
            self.logger.error(f"Event source {self.source.name} failed: {str(e)}")
            return SourceFailure(str(e), now)
        return None

    def tick(self) -> List[WatchItem]:
        """Run one collect-and-assess step and return what it emits."""
        items: List[WatchItem] = []
        failure = self._collect()
        if failure is not None:
            items.append(failure)

        with self._assessing:
            snapshot = self.registry.snapshot
            if detect_change(self._last_snapshot, snapshot):
                self.logger.info(f"Registry changed (version {snapshot.version}); re-assessing")
            else:
                self.logger.debug(f"No registry change at version {snapshot.version}")
            report = evaluate(snapshot, self.config, timestamp=self.clock.now())
            self._last_snapshot = snapshot
        items.append(report)
        return items

    def watch(self, max_ticks: Optional[int] = None) -> Iterator[WatchItem]:
        """Yield reports, one per poll interval, until stopped or ``max_ticks`` is reached."""
        self.logger.info(f"Watching registry every {self.config.poll_interval}s")
        ticks = 0
        while not self.stop_event.is_set():
            for item in self.tick():
                yield item
            ticks += 1
            if max_ticks is not None and ticks >= max_ticks:
                break
            if self.clock.sleep(self.config.poll_interval, self.stop_event):
                break
        self.logger.info(f"Watch loop stopped after {ticks} ticks")
