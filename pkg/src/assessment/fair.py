#!/usr/bin/env python3

"""FAIR stages: frequency and loss classification, worst-case loss, the
qualitative risk matrix and the quantitative risk report that replaces it."""

import bisect
import logging
import math
from dataclasses import dataclass, field
from decimal import Decimal
from enum import IntEnum
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from registry.models import DIMENSIONS, Dimension, LossItem, to_money
from utils.errors import (
    DimensionMismatch, InvalidRiskMatrix, InvalidScale, InvariantViolation, NegativeAmount, NegativeRate,
)

logger = logging.getLogger('risk_engine.fair')

DEFAULT_UNIT = 'conventional units'


class Level(IntEnum):
    """Five ordered levels shared by the frequency and loss magnitude scales."""

    VERY_LOW = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3
    VERY_HIGH = 4

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value: Union[str, int, 'Level']) -> 'Level':
        if isinstance(value, str):
            return cls[value.strip().upper()]
        return cls(value)


class RiskLevel(IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2
    CRITICAL = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value: Union[str, int, 'RiskLevel']) -> 'RiskLevel':
        if isinstance(value, str):
            return cls[value.strip().upper()]
        return cls(value)


def _thresholds(values: Sequence[Any], what: str, require_positive: bool = False) -> Tuple[float, ...]:
    try:
        thresholds = tuple(float(value) for value in values)
    except (TypeError, ValueError):
        raise InvalidScale(f"{what} thresholds must be numbers, got {values!r}")
    if len(thresholds) != 4:
        raise InvalidScale(f"{what} scale needs 4 thresholds, got {len(thresholds)}")
    if any(not math.isfinite(value) or value < 0 for value in thresholds):
        raise InvalidScale(f"{what} thresholds must be finite and non-negative")
    if require_positive and thresholds[0] <= 0:
        raise InvalidScale(f"lowest {what} threshold must be above zero")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise InvalidScale(f"{what} thresholds must be strictly increasing, got {thresholds}")
    return thresholds


@dataclass(frozen=True)
class FrequencyScale:
    """Thresholds in events per year splitting [0, inf) into five levels."""

    thresholds: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'thresholds', _thresholds(self.thresholds, 'frequency', require_positive=True))


@dataclass(frozen=True)
class LossMagnitudeScale:
    """Money thresholds splitting [0, inf) into five loss magnitude levels."""

    thresholds: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'thresholds', _thresholds(self.thresholds, 'loss', require_positive=True))


@dataclass(frozen=True)
class RiskMatrix:
    """5x5 grid of risk levels; rows are frequency levels, columns loss levels.

    Rows and columns must be non-decreasing.
    """

    cells: Tuple[Tuple[RiskLevel, ...], ...]

    def __post_init__(self):
        try:
            cells = tuple(tuple(RiskLevel.parse(cell) for cell in row) for row in self.cells)
        except (KeyError, ValueError, TypeError, AttributeError) as e:
            raise InvalidRiskMatrix(f"unknown risk level in matrix: {e}")
        if len(cells) != 5 or any(len(row) != 5 for row in cells):
            raise InvalidRiskMatrix("risk matrix must have 5 rows of 5 levels")
        for i in range(5):
            for j in range(5):
                if j > 0 and cells[i][j] < cells[i][j - 1]:
                    raise InvalidRiskMatrix(f"risk decreases along frequency row {Level(i).label}")
                if i > 0 and cells[i][j] < cells[i - 1][j]:
                    raise InvalidRiskMatrix(f"risk decreases along loss column {Level(j).label}")
        object.__setattr__(self, 'cells', cells)

    def to_names(self) -> List[List[str]]:
        return [[cell.label for cell in row] for row in self.cells]


def classify_frequency(rate: float, scale: FrequencyScale) -> Level:
    """Classify an annual event rate; a rate equal to a threshold takes the higher level.

    Raises:
        NegativeRate: rate below zero
    """
    if rate is None or math.isnan(rate) or rate < 0:
        raise NegativeRate(f"event rate must be >= 0, got {rate!r}")
    return Level(bisect.bisect_right(scale.thresholds, rate))


def classify_loss(amount: Union[float, Decimal], scale: LossMagnitudeScale) -> Level:
    """Classify a loss amount on the magnitude scale, thresholds classifying upward."""
    if amount is None or amount < 0:
        raise NegativeAmount(f"loss amount must be >= 0, got {amount!r}")
    return Level(bisect.bisect_right(scale.thresholds, float(amount)))


def worst_case_loss(breakdown: Iterable[Union[LossItem, Tuple[str, Any]]]) -> Decimal:
    """Total every loss type associated with a threat.

    Raises:
        NegativeAmount: an amount is below zero
    """
    total = Decimal(0)
    for item in breakdown:
        loss_type, amount = (item.loss_type, item.amount) if isinstance(item, LossItem) else item
        try:
            total += to_money(amount, f"{loss_type} loss")
        except InvariantViolation as e:
            raise NegativeAmount(str(e)) from e
    return total


def qualitative_risk(freq: Level, loss_level: Level, matrix: RiskMatrix) -> RiskLevel:
    """Read the risk level at the intersection of frequency and loss levels."""
    return matrix.cells[int(freq)][int(loss_level)]


@dataclass(frozen=True)
class DimensionRisk:
    """One column of a risk report."""

    dimension: Dimension
    probability: float
    loss: float
    risk: float
    level: Optional[RiskLevel] = None
    frequency_level: Optional[Level] = None
    loss_level: Optional[Level] = None
    frequency_rate: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dimension': self.dimension.value,
            'probability': self.probability,
            'loss': self.loss,
            'risk': self.risk,
            'level': self.level.label if self.level is not None else None,
            'frequency_level': self.frequency_level.label if self.frequency_level is not None else None,
            'loss_level': self.loss_level.label if self.loss_level is not None else None,
            'frequency_rate': self.frequency_rate,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DimensionRisk':
        def optional(parser, value):
            return parser(value) if value is not None else None

        return cls(
            dimension=Dimension(data['dimension']),
            probability=float(data['probability']),
            loss=float(data['loss']),
            risk=float(data['risk']),
            level=optional(RiskLevel.parse, data.get('level')),
            frequency_level=optional(Level.parse, data.get('frequency_level')),
            loss_level=optional(Level.parse, data.get('loss_level')),
            frequency_rate=optional(float, data.get('frequency_rate')),
        )


@dataclass(frozen=True)
class RiskReport:
    """Per-dimension probability, loss and risk with total R = sum(P_i * E_i).

    Values are kept at full precision; rounding happens only when rendering.
    """

    dimensions: Tuple[DimensionRisk, ...]
    total: float
    snapshot_version: int = 0
    timestamp: float = 0.0
    unit_label: str = DEFAULT_UNIT
    snapshot_digest: Optional[str] = None

    kind: str = field(default='risk', init=False)

    def dimension(self, dimension: Union[Dimension, str]) -> DimensionRisk:
        dimension = Dimension(dimension)
        for entry in self.dimensions:
            if entry.dimension == dimension:
                return entry
        raise KeyError(dimension.value)

    @property
    def probabilities(self) -> Dict[Dimension, float]:
        return {entry.dimension: entry.probability for entry in self.dimensions}

    @property
    def risks(self) -> Dict[Dimension, float]:
        return {entry.dimension: entry.risk for entry in self.dimensions}

    def exceeds(self, threshold: Optional[float]) -> bool:
        """True when a gate threshold is set and total risk is above it."""
        return threshold is not None and self.total > threshold

    def content_key(self) -> Tuple:
        """Numeric content only; ignores timestamp and version provenance."""
        return (tuple(tuple(entry.to_dict().items()) for entry in self.dimensions), self.total, self.unit_label)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'dimensions': [entry.to_dict() for entry in self.dimensions],
            'total': self.total,
            'snapshot_version': self.snapshot_version,
            'timestamp': self.timestamp,
            'unit_label': self.unit_label,
            'snapshot_digest': self.snapshot_digest,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RiskReport':
        return cls(
            dimensions=tuple(DimensionRisk.from_dict(entry) for entry in data['dimensions']),
            total=float(data['total']),
            snapshot_version=int(data.get('snapshot_version', 0)),
            timestamp=float(data.get('timestamp', 0.0)),
            unit_label=data.get('unit_label', DEFAULT_UNIT),
            snapshot_digest=data.get('snapshot_digest'),
        )


def _by_dimension(values: Mapping[Any, Any], what: str) -> Dict[Dimension, Any]:
    try:
        return {Dimension(key): value for key, value in values.items()}
    except ValueError as e:
        raise DimensionMismatch(f"unknown dimension in {what}: {e}")


def quantitative_risk(P: Mapping[Any, float], E: Mapping[Any, Union[float, Decimal]],
                      snapshot_version: int = 0, timestamp: float = 0.0,
                      levels: Optional[Mapping[Dimension, Tuple[RiskLevel, Level, Level, float]]] = None,
                      unit_label: str = DEFAULT_UNIT, snapshot_digest: Optional[str] = None) -> RiskReport:
    """Compute r_i = P_i * E_i per dimension and R = sum(r_i).

    Args:
        P (Mapping): Breach probability per dimension
        E (Mapping): Loss per dimension
        levels (Optional[Mapping]): Qualitative (risk, frequency, loss level, rate) per dimension

    Returns:
        RiskReport: The report, dimensions in confidentiality/integrity/availability order

    Raises:
        DimensionMismatch: P and E cover different dimensions
        InvariantViolation: probability outside [0, 1] or negative loss
    """
    probabilities = _by_dimension(P, 'probabilities')
    losses = _by_dimension(E, 'losses')
    if set(probabilities) != set(losses):
        missing = sorted(d.value for d in set(probabilities) ^ set(losses))
        raise DimensionMismatch(f"probabilities and losses cover different dimensions: {', '.join(missing)}")

    levels = levels or {}
    entries = []
    for dimension in DIMENSIONS:
        if dimension not in probabilities:
            continue
        probability = float(probabilities[dimension])
        if not math.isfinite(probability) or not 0.0 <= probability <= 1.0:
            raise InvariantViolation(f"{dimension.value} probability must be in [0, 1], got {probability!r}")
        loss = float(to_money(losses[dimension], f"{dimension.value} loss"))

        risk_level = frequency_level = loss_level = rate = None
        if dimension in levels:
            risk_level, frequency_level, loss_level, rate = levels[dimension]
        entries.append(DimensionRisk(dimension, probability, loss, probability * loss,
                                     risk_level, frequency_level, loss_level, rate))

    total = math.fsum(entry.risk for entry in entries)
    return RiskReport(tuple(entries), total, snapshot_version, timestamp, unit_label, snapshot_digest)
