#!/usr/bin/env python3

"""Record types held by the registry.

All records are frozen dataclasses; collections inside them are tuples, so a
snapshot built from records can be shared between threads without copying.
Money amounts are kept as ``Decimal`` so that persisted values reload exactly.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Iterable, Optional, Tuple

from utils.errors import InvariantViolation

# Tolerance on the occurrence mass of one threat event
OCCURRENCE_EPSILON = 1e-9


class Dimension(str, Enum):
    CONFIDENTIALITY = 'confidentiality'
    INTEGRITY = 'integrity'
    AVAILABILITY = 'availability'


# Report and table column order
DIMENSIONS: Tuple[Dimension, ...] = (
    Dimension.CONFIDENTIALITY,
    Dimension.INTEGRITY,
    Dimension.AVAILABILITY,
)


class AssetKind(str, Enum):
    COMPONENT = 'component'
    SOFTWARE = 'software'
    PROCESS = 'process'


class HypothesisSource(str, Enum):
    EXPERT = 'expert'
    EMPIRICAL = 'empirical'


class Severity(str, Enum):
    INFO = 'info'
    MEDIUM = 'medium'
    HIGH = 'high'


def _enum(enum_type, value: Any, what: str):
    try:
        return enum_type(value)
    except ValueError:
        allowed = ', '.join(member.value for member in enum_type)
        raise InvariantViolation(f"{what} must be one of {allowed}, got {value!r}")


def _identifier(value: Any, what: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise InvariantViolation(f"{what} must be a non-empty string, got {value!r}")
    if '\t' in value or '\n' in value:
        raise InvariantViolation(f"{what} must not contain tabs or newlines")
    return value


def _probability(value: Any, what: str) -> float:
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise InvariantViolation(f"{what} must be a number, got {value!r}")
    if not math.isfinite(number) or not 0.0 <= number <= 1.0:
        raise InvariantViolation(f"{what} must be in [0, 1], got {value!r}")
    return number


def to_money(value: Any, what: str = 'amount') -> Decimal:
    """Convert a JSON or user value into a non-negative Decimal amount."""
    if isinstance(value, bool):
        raise InvariantViolation(f"{what} must be a number, got {value!r}")
    try:
        amount = value if isinstance(value, Decimal) else Decimal(str(value))
    except (InvalidOperation, ValueError):
        raise InvariantViolation(f"{what} must be a decimal amount, got {value!r}")
    if not amount.is_finite() or amount < 0:
        raise InvariantViolation(f"{what} must be a finite amount >= 0, got {value!r}")
    return amount


@dataclass(frozen=True)
class Asset:
    """A system component, software item or process (the assessment object)."""

    id: str
    name: str
    kind: AssetKind
    description: str = ''

    def __post_init__(self):
        _identifier(self.id, 'asset id')
        object.__setattr__(self, 'kind', _enum(AssetKind, self.kind, 'asset kind'))

    def to_dict(self) -> Dict[str, Any]:
        return {'id': self.id, 'name': self.name, 'kind': self.kind.value,
                'description': self.description}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Asset':
        return cls(id=data.get('id'), name=data.get('name', data.get('id', '')),
                   kind=data.get('kind'), description=data.get('description', ''))


@dataclass(frozen=True)
class Hypothesis:
    """A factor under which a threat event can occur.

    ``occurrence`` is P(H) and ``conditional_breach`` is P(A|H).
    """

    id: str
    occurrence: float
    conditional_breach: float
    source: HypothesisSource = HypothesisSource.EXPERT

    def __post_init__(self):
        _identifier(self.id, 'hypothesis id')
        object.__setattr__(self, 'occurrence', _probability(self.occurrence, f"occurrence of {self.id}"))
        object.__setattr__(self, 'conditional_breach',
                           _probability(self.conditional_breach, f"conditional breach of {self.id}"))
        object.__setattr__(self, 'source', _enum(HypothesisSource, self.source, 'hypothesis source'))

    def with_occurrence(self, occurrence: float) -> 'Hypothesis':
        return Hypothesis(self.id, occurrence, self.conditional_breach, self.source)

    def to_dict(self) -> Dict[str, Any]:
        return {'id': self.id, 'occurrence': self.occurrence,
                'conditional_breach': self.conditional_breach, 'source': self.source.value}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Hypothesis':
        return cls(id=data.get('id'), occurrence=data.get('occurrence'),
                   conditional_breach=data.get('conditional_breach'),
                   source=data.get('source', HypothesisSource.EXPERT.value))


@dataclass(frozen=True)
class LossItem:
    loss_type: str
    amount: Decimal

    def __post_init__(self):
        object.__setattr__(self, 'amount', to_money(self.amount, f"{self.loss_type} loss"))

    def to_dict(self) -> Dict[str, Any]:
        return {'loss_type': self.loss_type, 'amount': str(self.amount)}


@dataclass(frozen=True)
class ThreatEvent:
    """An event that breaches one CIA dimension of an asset.

    When ``loss_breakdown`` is given, ``base_loss`` is its total; passing
    ``base_loss=None`` derives it.
    """

    id: str
    asset_id: str
    dimension: Dimension
    label: str = ''
    hypotheses: Tuple[Hypothesis, ...] = ()
    base_loss: Optional[Decimal] = None
    loss_breakdown: Tuple[LossItem, ...] = ()

    def __post_init__(self):
        _identifier(self.id, 'threat event id')
        _identifier(self.asset_id, 'asset reference')
        object.__setattr__(self, 'dimension', _enum(Dimension, self.dimension, 'dimension'))
        object.__setattr__(self, 'hypotheses', tuple(self.hypotheses))
        object.__setattr__(self, 'loss_breakdown', tuple(
            item if isinstance(item, LossItem) else LossItem(*item) for item in self.loss_breakdown))

        ids = [hypothesis.id for hypothesis in self.hypotheses]
        if len(ids) != len(set(ids)):
            raise InvariantViolation(f"hypothesis ids repeat within threat event {self.id}")

        mass = sum(hypothesis.occurrence for hypothesis in self.hypotheses)
        if mass > 1.0 + OCCURRENCE_EPSILON:
            raise InvariantViolation(
                f"occurrence probabilities of {self.id} sum to {mass:.6f}, more than 1")

        total = sum((item.amount for item in self.loss_breakdown), Decimal(0))
        if self.base_loss is None:
            object.__setattr__(self, 'base_loss', total)
        else:
            object.__setattr__(self, 'base_loss', to_money(self.base_loss, f"base loss of {self.id}"))
            if self.loss_breakdown and self.base_loss != total:
                raise InvariantViolation(
                    f"base loss of {self.id} ({self.base_loss}) differs from its breakdown total ({total})")

    @property
    def assessable(self) -> bool:
        return bool(self.hypotheses)

    def hypothesis(self, hypothesis_id: str) -> Optional[Hypothesis]:
        for hypothesis in self.hypotheses:
            if hypothesis.id == hypothesis_id:
                return hypothesis
        return None

    def replace_hypotheses(self, hypotheses: Iterable[Hypothesis]) -> 'ThreatEvent':
        return ThreatEvent(self.id, self.asset_id, self.dimension, self.label,
                           tuple(hypotheses), self.base_loss, self.loss_breakdown)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'asset_id': self.asset_id,
            'dimension': self.dimension.value,
            'label': self.label,
            'hypotheses': [hypothesis.to_dict() for hypothesis in self.hypotheses],
            'base_loss': str(self.base_loss),
            'loss_breakdown': [item.to_dict() for item in self.loss_breakdown],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ThreatEvent':
        breakdown = tuple(LossItem(item.get('loss_type', ''), item.get('amount'))
                          for item in data.get('loss_breakdown', []))
        return cls(
            id=data.get('id'),
            asset_id=data.get('asset_id'),
            dimension=data.get('dimension'),
            label=data.get('label', ''),
            hypotheses=tuple(Hypothesis.from_dict(h) for h in data.get('hypotheses', [])),
            base_loss=data.get('base_loss'),
            loss_breakdown=breakdown,
        )


@dataclass(frozen=True)
class Control:
    """A mitigation that multiplies the occurrence probability of its target.

    Without ``hypothesis_id`` every hypothesis of the target threat event is
    scaled.
    """

    id: str
    threat_id: str
    effect: float
    hypothesis_id: Optional[str] = None
    description: str = ''
    applied: bool = True

    def __post_init__(self):
        _identifier(self.id, 'control id')
        _identifier(self.threat_id, 'control target')
        object.__setattr__(self, 'effect', _probability(self.effect, f"effect of control {self.id}"))
        if not isinstance(self.applied, bool):
            raise InvariantViolation(f"applied flag of control {self.id} must be a boolean")

    def to_dict(self) -> Dict[str, Any]:
        return {'id': self.id, 'threat_id': self.threat_id, 'hypothesis_id': self.hypothesis_id,
                'effect': self.effect, 'description': self.description, 'applied': self.applied}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Control':
        return cls(id=data.get('id'), threat_id=data.get('threat_id'), effect=data.get('effect'),
                   hypothesis_id=data.get('hypothesis_id'), description=data.get('description', ''),
                   applied=data.get('applied', True))


@dataclass(frozen=True)
class MonitorEvent:
    """A timestamped CIA observation recorded by monitoring."""

    timestamp: float
    dimension: Dimension
    asset_id: str
    hypothesis_id: Optional[str] = None
    severity: Severity = Severity.INFO
    payload: str = ''

    def __post_init__(self):
        try:
            timestamp = float(self.timestamp)
        except (TypeError, ValueError):
            raise InvariantViolation(f"event timestamp must be a number, got {self.timestamp!r}")
        if not math.isfinite(timestamp) or timestamp < 0:
            raise InvariantViolation(f"event timestamp must be finite and >= 0, got {self.timestamp!r}")
        object.__setattr__(self, 'timestamp', timestamp)
        object.__setattr__(self, 'dimension', _enum(Dimension, self.dimension, 'dimension'))
        object.__setattr__(self, 'severity', _enum(Severity, self.severity, 'severity'))
        _identifier(self.asset_id, 'event asset reference')

    def to_dict(self) -> Dict[str, Any]:
        return {'timestamp': self.timestamp, 'dimension': self.dimension.value,
                'asset_id': self.asset_id, 'hypothesis_id': self.hypothesis_id,
                'severity': self.severity.value, 'payload': self.payload}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MonitorEvent':
        return cls(timestamp=data.get('timestamp'), dimension=data.get('dimension'),
                   asset_id=data.get('asset_id'), hypothesis_id=data.get('hypothesis_id'),
                   severity=data.get('severity', Severity.INFO.value), payload=data.get('payload', ''))


def canonical_json(data: Dict[str, Any]) -> str:
    """Serialize a record dict deterministically (sorted keys, no spaces)."""
    return json.dumps(data, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


@dataclass(frozen=True)
class RegistrySnapshot:
    """Immutable view of every registry record at one version."""

    assets: Tuple[Asset, ...] = ()
    threat_events: Tuple[ThreatEvent, ...] = ()
    controls: Tuple[Control, ...] = ()
    monitor_events: Tuple[MonitorEvent, ...] = ()
    version: int = 0
    _index: Dict[str, Any] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'assets', tuple(self.assets))
        object.__setattr__(self, 'threat_events', tuple(self.threat_events))
        object.__setattr__(self, 'controls', tuple(self.controls))
        object.__setattr__(self, 'monitor_events', tuple(self.monitor_events))
        object.__setattr__(self, '_index', {
            'assets': {asset.id: asset for asset in self.assets},
            'threats': {threat.id: threat for threat in self.threat_events},
            'controls': {control.id: control for control in self.controls},
        })

    def asset(self, asset_id: str) -> Optional[Asset]:
        return self._index['assets'].get(asset_id)

    def threat(self, threat_id: str) -> Optional[ThreatEvent]:
        return self._index['threats'].get(threat_id)

    def control(self, control_id: str) -> Optional[Control]:
        return self._index['controls'].get(control_id)

    def hypothesis_ids(self) -> set:
        return {hypothesis.id for threat in self.threat_events for hypothesis in threat.hypotheses}

    @property
    def is_empty(self) -> bool:
        return not (self.assets or self.threat_events or self.controls or self.monitor_events)

    def records(self) -> Iterable[Tuple[str, Dict[str, Any]]]:
        """Yield (kind, record dict) pairs in persistence order."""
        for asset in self.assets:
            yield 'ASSET', asset.to_dict()
        for threat in self.threat_events:
            yield 'THREAT', threat.to_dict()
        for control in self.controls:
            yield 'CONTROL', control.to_dict()
        for event in self.monitor_events:
            yield 'EVENT', event.to_dict()

    @cached_property
    def content_digest(self) -> str:
        """SHA-256 over every record; the version number is not content."""
        digest = hashlib.sha256()
        for kind, data in self.records():
            digest.update(kind.encode('utf-8'))
            digest.update(b'\t')
            digest.update(canonical_json(data).encode('utf-8'))
            digest.update(b'\n')
        return digest.hexdigest()
