#!/usr/bin/env python3

"""Seeded Poisson generator of monitor events.

Each generator draws its arrivals from its own child of the scenario seed, so
adding a generator never changes the stream of the others. A generator with
``rate_end`` ramps its rate linearly over the scenario and is sampled by
thinning.
"""

import json
import logging
import math
import queue
import threading
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from registry.models import Dimension, MonitorEvent, Severity
from utils.errors import InvalidScenario, InvariantViolation, IoFailure

logger = logging.getLogger('risk_engine.simulation')

SEVERITIES = (Severity.INFO, Severity.MEDIUM, Severity.HIGH)
SECONDS_PER_HOUR = 3600.0
MAX_SEED = 2 ** 64


@dataclass(frozen=True)
class GeneratorSpec:
    """One event feed: rates are events per simulated hour."""

    dimension: Dimension
    asset_id: str
    hypothesis_id: Optional[str]
    rate: float
    severity_mix: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    rate_end: Optional[float] = None
    payload: str = ''

    def __post_init__(self):
        try:
            object.__setattr__(self, 'dimension', Dimension(self.dimension))
        except ValueError:
            raise InvalidScenario(f"unknown dimension {self.dimension!r}")
        if not isinstance(self.asset_id, str) or not self.asset_id:
            raise InvalidScenario("generator needs an asset id")
        for what, value in (('rate', self.rate), ('rate_end', self.rate_end)):
            if value is not None and (not math.isfinite(value) or value < 0):
                raise InvalidScenario(f"generator {what} must be a finite value >= 0, got {value!r}")
        mix = tuple(float(weight) for weight in self.severity_mix)
        if len(mix) != 3 or any(weight < 0 for weight in mix) or abs(sum(mix) - 1.0) > 1e-9:
            raise InvalidScenario(f"severity mix must be 3 non-negative weights summing to 1, got {mix}")
        object.__setattr__(self, 'severity_mix', mix)

    def rate_at(self, fraction: np.ndarray) -> np.ndarray:
        """Rate per second at each point of the scenario (0 = start, 1 = end)."""
        end = self.rate if self.rate_end is None else self.rate_end
        return (self.rate + (end - self.rate) * fraction) / SECONDS_PER_HOUR

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'GeneratorSpec':
        try:
            return cls(
                dimension=data['dimension'],
                asset_id=data['asset_id'],
                hypothesis_id=data.get('hypothesis_id'),
                rate=float(data['rate']),
                severity_mix=tuple(data.get('severity_mix', (1.0, 0.0, 0.0))),
                rate_end=float(data['rate_end']) if data.get('rate_end') is not None else None,
                payload=data.get('payload', ''),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, InvalidScenario):
                raise
            raise InvalidScenario(f"invalid generator {data!r}: {e}")


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    duration: float
    generators: Tuple[GeneratorSpec, ...] = ()
    start: float = 0.0

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < MAX_SEED:
            raise InvalidScenario(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if not math.isfinite(self.duration) or self.duration <= 0:
            raise InvalidScenario(f"duration must be > 0, got {self.duration!r}")
        if not math.isfinite(self.start) or self.start < 0:
            raise InvalidScenario(f"start must be >= 0, got {self.start!r}")
        object.__setattr__(self, 'generators', tuple(self.generators))

    def with_seed(self, seed: int) -> 'Scenario':
        return Scenario(self.name, seed, self.duration, self.generators, self.start)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Scenario':
        try:
            return cls(
                name=data.get('name', 'scenario'),
                seed=int(data.get('seed', 0)),
                duration=float(data['duration']),
                generators=tuple(GeneratorSpec.from_dict(item) for item in data.get('generators', [])),
                start=float(data.get('start', 0.0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, InvalidScenario):
                raise
            raise InvalidScenario(f"invalid scenario: {e}")


def load_scenario(path: str) -> Scenario:
    """Read a JSON scenario file.

    Raises:
        IoFailure: the file cannot be read
        InvalidScenario: the content is not a valid scenario
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        logger.error(f"Error reading scenario {path}: {str(e)}")
        raise IoFailure(f"cannot read scenario file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidScenario(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise InvalidScenario(f"{path} must hold a JSON object")
    return Scenario.from_dict(data)


def _arrivals(rng: np.random.Generator, spec: GeneratorSpec, duration: float) -> np.ndarray:
    peak = max(spec.rate, spec.rate_end if spec.rate_end is not None else spec.rate) / SECONDS_PER_HOUR
    if peak <= 0:
        return np.empty(0)
    # Conditional on the count, Poisson arrival times are uniform on the horizon
    count = rng.poisson(peak * duration)
    times = np.sort(rng.uniform(0.0, duration, size=count))
    if spec.rate_end is not None:
        keep = rng.uniform(0.0, 1.0, size=count) < spec.rate_at(times / duration) / peak
        times = times[keep]
    return times


def generate(scenario: Scenario) -> List[MonitorEvent]:
    """Generate the scenario's event stream, ordered by timestamp.

    Equal scenarios (seed included) give identical streams.

    Raises:
        InvalidScenario: the scenario is not valid
    """
    if not isinstance(scenario, Scenario):
        raise InvalidScenario("generate needs a Scenario")

    seeds = np.random.SeedSequence(scenario.seed).spawn(len(scenario.generators))
    keyed = []
    for index, (spec, seed) in enumerate(zip(scenario.generators, seeds)):
        rng = np.random.default_rng(seed)
        times = _arrivals(rng, spec, scenario.duration)
        severities = rng.choice(len(SEVERITIES), size=len(times), p=spec.severity_mix)
        for position, (offset, severity) in enumerate(zip(times, severities)):
            try:
                event = MonitorEvent(scenario.start + float(offset), spec.dimension, spec.asset_id,
                                     spec.hypothesis_id, SEVERITIES[int(severity)], spec.payload)
            except InvariantViolation as e:
                raise InvalidScenario(str(e)) from e
            keyed.append((event.timestamp, index, position, event))
        logger.debug(f"Generator {index} ({spec.dimension.value}/{spec.asset_id}) produced {len(times)} events")

    keyed.sort(key=lambda item: item[:3])
    events = [item[3] for item in keyed]
    logger.info(f"Scenario {scenario.name} (seed {scenario.seed}) generated {len(events)} events")
    return events


_END = object()


class EventStream:
    """Iterates a scenario's events through a bounded queue filled by a producer thread.

    The producer blocks while the queue is full.
    """

    def __init__(self, scenario: Scenario, maxsize: int = 1024):
        if maxsize < 1:
            raise InvalidScenario("stream queue size must be >= 1")
        self.scenario = scenario
        self.queue: 'queue.Queue' = queue.Queue(maxsize=maxsize)
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._error: Optional[BaseException] = None

    def _produce(self) -> None:
        try:
            for event in generate(self.scenario):
                while not self._stop.is_set():
                    try:
                        self.queue.put(event, timeout=0.1)
                        break
                    except queue.Full:
                        continue
                if self._stop.is_set():
                    return
        except BaseException as e:
            self._error = e
        finally:
            while not self._stop.is_set():
                try:
                    self.queue.put(_END, timeout=0.1)
                    break
                except queue.Full:
                    continue

    def __iter__(self) -> Iterator[MonitorEvent]:
        self._thread = threading.Thread(target=self._produce, name=f"monitor-sim-{self.scenario.name}",
                                        daemon=True)
        self._thread.start()
        try:
            while True:
                item = self.queue.get()
                if item is _END:
                    break
                yield item
            if self._error is not None:
                raise self._error
        finally:
            self.close()

    def close(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=1.0)
