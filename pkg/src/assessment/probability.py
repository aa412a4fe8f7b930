#!/usr/bin/env python3

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from registry.models import OCCURRENCE_EPSILON, Dimension, Hypothesis, MonitorEvent
from utils.errors import (
    EmptyHypotheses, OccurrenceMassExceeded, ProbabilityError, ZeroOpportunities,
)

logger = logging.getLogger('risk_engine.probability')


def _check_probability(value: float, what: str) -> float:
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ProbabilityError(f"{what} must be in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class EventProbability:
    """P(A) of one threat event; ``clamped`` marks a raw sum above one."""

    threat_event_id: Optional[str]
    value: float
    clamped: bool = False

    def __post_init__(self):
        _check_probability(self.value, 'event probability')


@dataclass(frozen=True)
class DimensionProbability:
    """Probability that at least one event breaches a CIA dimension."""

    dimension: Optional[Dimension]
    value: float
    contributing_events: Tuple[EventProbability, ...] = ()

    def __post_init__(self):
        _check_probability(self.value, 'dimension probability')


def event_probability(hypotheses: Sequence[Hypothesis], threat_event_id: Optional[str] = None) -> EventProbability:
    """Total probability of a threat event over its hypotheses.

    P(A) = min(1, sum_j P(H_j) * P(A|H_j)).

    Args:
        hypotheses (Sequence[Hypothesis]): Hypotheses of one threat event
        threat_event_id (Optional[str]): Id carried into the result

    Returns:
        EventProbability: The event probability

    Raises:
        EmptyHypotheses: no hypotheses given
        OccurrenceMassExceeded: occurrence probabilities sum above 1 + 1e-9
    """
    if not hypotheses:
        raise EmptyHypotheses(f"threat event {threat_event_id or '?'} has no hypotheses")

    occurrences = np.array([hypothesis.occurrence for hypothesis in hypotheses], dtype=float)
    conditionals = np.array([hypothesis.conditional_breach for hypothesis in hypotheses], dtype=float)

    mass = math.fsum(occurrences)
    if mass > 1.0 + OCCURRENCE_EPSILON:
        raise OccurrenceMassExceeded(
            f"occurrence probabilities of {threat_event_id or '?'} sum to {mass:.6f}")

    raw = math.fsum(occurrences * conditionals)
    clamped = raw > 1.0
    if clamped:
        logger.warning(f"Event probability of {threat_event_id or '?'} clamped from {raw:.6f} to 1")
    return EventProbability(threat_event_id, min(1.0, raw), clamped)


def dimension_probability(events: Iterable[EventProbability],
                          dimension: Optional[Dimension] = None) -> DimensionProbability:
    """Probability that at least one of independent events occurs.

    P = 1 - prod_i (1 - P(A_i)); an empty list gives 0.
    """
    events = tuple(events)
    for event in events:
        _check_probability(event.value, f"probability of {event.threat_event_id or 'event'}")
    if not events:
        return DimensionProbability(dimension, 0.0, ())

    survival = float(np.prod([1.0 - event.value for event in events]))
    value = min(1.0, max(0.0, 1.0 - survival))
    # Keep union dominance exact against rounding in the product
    value = max(value, max(event.value for event in events))
    return DimensionProbability(dimension, value, events)


def estimate_occurrence(events: Iterable[MonitorEvent], hypothesis_id: str, window: float,
                        opportunities: int, alpha: float = 0.0, now: Optional[float] = None) -> float:
    """Estimate a hypothesis occurrence probability from recorded events.

    Counts events tagged with ``hypothesis_id`` whose timestamp falls in
    ``(now - window, now]`` and returns ``(k + alpha) / (opportunities + 2 alpha)``
    with ``k`` capped at ``opportunities``. ``now`` defaults to the latest
    event timestamp.

    Args:
        events (Iterable[MonitorEvent]): Recorded events
        hypothesis_id (str): Hypothesis to count
        window (float): Window length in seconds
        opportunities (int): Number of trials in the window
        alpha (float): Additive smoothing constant, 0 for raw frequency

    Returns:
        float: Probability in [0, 1]

    Raises:
        ZeroOpportunities: opportunities below one
    """
    if opportunities is None or opportunities < 1:
        raise ZeroOpportunities(f"opportunities must be >= 1, got {opportunities!r}")
    if not window > 0:
        raise ProbabilityError(f"window must be > 0, got {window!r}")
    if alpha < 0:
        raise ProbabilityError(f"smoothing constant must be >= 0, got {alpha!r}")

    events = tuple(events)
    if now is None:
        now = max((event.timestamp for event in events), default=0.0)
    start = now - window

    count = sum(1 for event in events
                if event.hypothesis_id == hypothesis_id and start < event.timestamp <= now)
    count = min(count, opportunities)
    estimate = (count + alpha) / (opportunities + 2 * alpha)
    logger.debug(f"Hypothesis {hypothesis_id}: {count}/{opportunities} events in window, estimate {estimate:.6f}")
    return estimate
