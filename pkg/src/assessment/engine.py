#!/usr/bin/env python3

"""Assessment engine.

Registry records are the component and threat databases; ``assess`` refreshes
empirical hypotheses from the event log, composes event and dimension
probabilities, totals losses and computes risk; ``apply_controls`` re-runs
the same pipeline with control effects to list the remaining risk.
"""

import logging
import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from assessment.fair import (
    DEFAULT_UNIT, FrequencyScale, LossMagnitudeScale, RiskMatrix, RiskReport,
    classify_frequency, classify_loss, qualitative_risk, quantitative_risk, worst_case_loss,
)
from assessment.probability import (
    EventProbability, dimension_probability, estimate_occurrence, event_probability,
)
from registry.models import DIMENSIONS, Dimension, Hypothesis, HypothesisSource, RegistrySnapshot, ThreatEvent
from utils.config import DEFAULT_CONFIG
from utils.errors import ConfigError, DanglingControlTarget, FairError
from utils.logger import log_at_risk_level

logger = logging.getLogger('risk_engine.engine')

SECONDS_PER_YEAR = 365 * 24 * 3600

HypothesisTransform = Callable[[ThreatEvent, Hypothesis], Hypothesis]


@dataclass(frozen=True)
class OpportunitiesPolicy:
    """Denominator of empirical frequency: a fixed count or derived from the window."""

    mode: str = 'count'
    default: int = 100
    per_threat: Mapping[str, int] = field(default_factory=dict)
    time_unit_seconds: float = 3600.0

    def __post_init__(self):
        if self.mode not in ('count', 'time'):
            raise ConfigError(f"opportunities mode must be 'count' or 'time', got {self.mode!r}")
        if self.mode == 'count' and int(self.default) < 1:
            raise ConfigError("default opportunities must be >= 1")
        if not self.time_unit_seconds > 0:
            raise ConfigError("opportunity time unit must be > 0")
        if any(int(value) < 1 for value in self.per_threat.values()):
            raise ConfigError("per-threat opportunities must be >= 1")

    def for_threat(self, threat_id: str, window: float) -> int:
        if threat_id in self.per_threat:
            return int(self.per_threat[threat_id])
        if self.mode == 'time':
            return max(1, math.ceil(window / self.time_unit_seconds))
        return int(self.default)


@dataclass(frozen=True)
class AssessmentConfig:
    """Typed assessment settings built from the configuration dictionary."""

    window_seconds: float = 86400.0
    opportunities: OpportunitiesPolicy = field(default_factory=OpportunitiesPolicy)
    smoothing_alpha: float = 0.0
    frequency_scale: FrequencyScale = field(
        default_factory=lambda: FrequencyScale(tuple(DEFAULT_CONFIG['scales']['frequency'])))
    loss_scale: LossMagnitudeScale = field(
        default_factory=lambda: LossMagnitudeScale(tuple(DEFAULT_CONFIG['scales']['loss'])))
    matrix: RiskMatrix = field(default_factory=lambda: RiskMatrix(DEFAULT_CONFIG['matrix']))
    gate_threshold: Optional[float] = None
    poll_interval: float = 60.0
    unit_label: str = DEFAULT_UNIT

    def __post_init__(self):
        if not self.window_seconds > 0:
            raise ConfigError(f"frequency window must be > 0, got {self.window_seconds!r}")
        if not self.poll_interval > 0:
            raise ConfigError(f"poll interval must be > 0, got {self.poll_interval!r}")
        if self.smoothing_alpha < 0:
            raise ConfigError("smoothing constant must be >= 0")
        if self.gate_threshold is not None and self.gate_threshold < 0:
            raise ConfigError("gate threshold must be >= 0")

    @classmethod
    def from_dict(cls, config: Dict[str, Any]) -> 'AssessmentConfig':
        """Build the settings from a loaded configuration dictionary.

        Raises:
            ConfigError: a value is missing or invalid
        """
        try:
            general = config.get('general', {})
            assessment = config.get('assessment', {})
            opportunities = assessment.get('opportunities', {})
            scales = config.get('scales', {})
            gate = assessment.get('gate_threshold')

            return cls(
                window_seconds=float(assessment.get('window_seconds', 86400)),
                opportunities=OpportunitiesPolicy(
                    mode=opportunities.get('mode', 'count'),
                    default=int(opportunities.get('default', 100)),
                    per_threat=dict(opportunities.get('per_threat', {})),
                    time_unit_seconds=float(opportunities.get('time_unit_seconds', 3600)),
                ),
                smoothing_alpha=float(assessment.get('smoothing_alpha', 0)),
                frequency_scale=FrequencyScale(tuple(scales.get('frequency', DEFAULT_CONFIG['scales']['frequency']))),
                loss_scale=LossMagnitudeScale(tuple(scales.get('loss', DEFAULT_CONFIG['scales']['loss']))),
                matrix=RiskMatrix(config.get('matrix', DEFAULT_CONFIG['matrix'])),
                gate_threshold=float(gate) if gate is not None else None,
                poll_interval=float(general.get('poll_interval', 60)),
                unit_label=general.get('unit_label', DEFAULT_UNIT),
            )
        except ConfigError:
            raise
        except (FairError, TypeError, ValueError, AttributeError) as e:
            raise ConfigError(f"invalid assessment configuration: {e}") from e


@dataclass(frozen=True)
class ResidualReport:
    """Risk before and after the applied controls."""

    before: RiskReport
    after: RiskReport
    applied_controls: Tuple[str, ...] = ()

    kind: str = field(default='residual', init=False)

    @property
    def total(self) -> float:
        return self.after.total

    @property
    def snapshot_version(self) -> int:
        return self.after.snapshot_version

    def exceeds(self, threshold: Optional[float]) -> bool:
        return self.after.exceeds(threshold)

    def content_key(self) -> Tuple:
        return (self.before.content_key(), self.after.content_key(), self.applied_controls)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'before': self.before.to_dict(),
            'after': self.after.to_dict(),
            'applied_controls': list(self.applied_controls),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ResidualReport':
        return cls(RiskReport.from_dict(data['before']), RiskReport.from_dict(data['after']),
                   tuple(data.get('applied_controls', [])))


def report_from_dict(data: Dict[str, Any]):
    """Rebuild a RiskReport or ResidualReport from its JSON form."""
    if data.get('kind') == 'residual':
        return ResidualReport.from_dict(data)
    return RiskReport.from_dict(data)


def reference_time(snapshot: RegistrySnapshot) -> float:
    """Latest recorded event time; the end of every empirical window."""
    return max((event.timestamp for event in snapshot.monitor_events), default=0.0)


def refreshed_hypotheses(snapshot: RegistrySnapshot, threat: ThreatEvent,
                         config: AssessmentConfig) -> List[Hypothesis]:
    """Hypotheses of a threat with empirical occurrences re-estimated from the event log.

    Only events on the threat's asset and dimension count. When the refreshed
    occurrences sum above one, the empirical ones are scaled down so the
    total is one; expert occurrences keep their values.
    """
    now = reference_time(snapshot)
    opportunities = config.opportunities.for_threat(threat.id, config.window_seconds)
    relevant = [event for event in snapshot.monitor_events
                if event.asset_id == threat.asset_id and event.dimension == threat.dimension]
    hypotheses = []
    for hypothesis in threat.hypotheses:
        if hypothesis.source == HypothesisSource.EMPIRICAL:
            occurrence = estimate_occurrence(relevant, hypothesis.id, config.window_seconds,
                                             opportunities, config.smoothing_alpha, now=now)
            hypothesis = hypothesis.with_occurrence(occurrence)
        hypotheses.append(hypothesis)
    return _bounded_empirical_mass(threat, hypotheses)


def _bounded_empirical_mass(threat: ThreatEvent, hypotheses: List[Hypothesis]) -> List[Hypothesis]:
    empirical = math.fsum(h.occurrence for h in hypotheses if h.source == HypothesisSource.EMPIRICAL)
    expert = math.fsum(h.occurrence for h in hypotheses if h.source != HypothesisSource.EMPIRICAL)
    if empirical == 0 or expert + empirical <= 1.0:
        return hypotheses
    scale = max(0.0, 1.0 - expert) / empirical
    logger.warning(f"Threat event {threat.id}: empirical occurrences sum to {empirical:.4f} with "
                   f"{expert:.4f} from expert hypotheses; scaling empirical estimates by {scale:.4f}")
    return [h.with_occurrence(h.occurrence * scale) if h.source == HypothesisSource.EMPIRICAL else h
            for h in hypotheses]


def threat_loss(threat: ThreatEvent) -> Decimal:
    """Worst-case loss of a threat: its breakdown total, or the base loss when there is none."""
    if threat.loss_breakdown:
        return worst_case_loss(threat.loss_breakdown)
    return threat.base_loss


def observed_rate(snapshot: RegistrySnapshot, dimension: Dimension, window: float) -> Optional[float]:
    """Annualized count of a dimension's monitor events inside the window, None without events."""
    now = reference_time(snapshot)
    count = sum(1 for event in snapshot.monitor_events
                if event.dimension == dimension and now - window < event.timestamp <= now)
    if count == 0:
        return None
    return count * SECONDS_PER_YEAR / window


def _assess(snapshot: RegistrySnapshot, config: AssessmentConfig, timestamp: Optional[float],
            transform: Optional[HypothesisTransform]) -> RiskReport:
    events: Dict[Dimension, List[EventProbability]] = {dimension: [] for dimension in DIMENSIONS}
    losses: Dict[Dimension, Decimal] = {dimension: Decimal(0) for dimension in DIMENSIONS}

    for threat in snapshot.threat_events:
        if not threat.assessable:
            logger.warning(f"Threat event {threat.id} has no hypotheses and is not assessed")
            continue
        hypotheses = refreshed_hypotheses(snapshot, threat, config)
        if transform is not None:
            hypotheses = [transform(threat, hypothesis) for hypothesis in hypotheses]
        events[threat.dimension].append(event_probability(hypotheses, threat.id))
        losses[threat.dimension] += threat_loss(threat)

    probabilities = {}
    levels = {}
    for dimension in DIMENSIONS:
        probability = dimension_probability(events[dimension], dimension).value
        probabilities[dimension] = probability

        rate = observed_rate(snapshot, dimension, config.window_seconds)
        if rate is None:
            rate = probability
        frequency_level = classify_frequency(rate, config.frequency_scale)
        loss_level = classify_loss(losses[dimension], config.loss_scale)
        risk_level = qualitative_risk(frequency_level, loss_level, config.matrix)
        levels[dimension] = (risk_level, frequency_level, loss_level, rate)

    return quantitative_risk(
        probabilities, losses,
        snapshot_version=snapshot.version,
        timestamp=reference_time(snapshot) if timestamp is None else timestamp,
        levels=levels,
        unit_label=config.unit_label,
        snapshot_digest=snapshot.content_digest,
    )


def assess(snapshot: RegistrySnapshot, config: AssessmentConfig, timestamp: Optional[float] = None) -> RiskReport:
    """Run one assessment over a snapshot.

    Deterministic for a fixed snapshot and configuration; ``timestamp``
    defaults to the latest recorded event time.

    Args:
        snapshot (RegistrySnapshot): Registry state to assess
        config (AssessmentConfig): Assessment settings
        timestamp (Optional[float]): Report time stamp

    Returns:
        RiskReport: Probability, loss and risk per CIA dimension
    """
    report = _assess(snapshot, config, timestamp, None)
    logger.info(f"Assessed registry version {snapshot.version}: total risk {report.total:.1f} {report.unit_label}")
    for entry in report.dimensions:
        if entry.level is not None and entry.risk > 0:
            log_at_risk_level(logger, entry.level.label,
                              f"{entry.dimension.value}: P={entry.probability:.4f} r={entry.risk:.1f} "
                              f"({entry.level.label})")
    return report


def control_effects(snapshot: RegistrySnapshot) -> Tuple[Dict[Tuple[str, Optional[str]], float], Tuple[str, ...]]:
    """Combined multiplicative effect per (threat, hypothesis or None) target of applied controls.

    Raises:
        DanglingControlTarget: a control target does not resolve
    """
    effects: Dict[Tuple[str, Optional[str]], float] = {}
    applied = []
    for control in snapshot.controls:
        threat = snapshot.threat(control.threat_id)
        if threat is None:
            raise DanglingControlTarget(f"control {control.id} targets unknown threat event {control.threat_id}")
        if control.hypothesis_id is not None and threat.hypothesis(control.hypothesis_id) is None:
            raise DanglingControlTarget(
                f"control {control.id} targets unknown hypothesis {control.hypothesis_id} of {threat.id}")
        if not control.applied:
            continue
        key = (control.threat_id, control.hypothesis_id)
        effects[key] = effects.get(key, 1.0) * control.effect
        applied.append(control.id)
    return effects, tuple(applied)


def apply_controls(snapshot: RegistrySnapshot, report: RiskReport, config: AssessmentConfig) -> ResidualReport:
    """Re-run the assessment with applied controls scaling hypothesis occurrences.

    The snapshot is not modified; controls act on a view of the hypotheses.

    Args:
        snapshot (RegistrySnapshot): Registry state holding the controls
        report (RiskReport): Assessment without controls
        config (AssessmentConfig): Assessment settings

    Returns:
        ResidualReport: Before and after reports with the applied control ids

    Raises:
        DanglingControlTarget: a control target does not resolve
    """
    effects, applied = control_effects(snapshot)
    if not applied:
        return ResidualReport(report, report, ())

    def transform(threat: ThreatEvent, hypothesis: Hypothesis) -> Hypothesis:
        factor = effects.get((threat.id, None), 1.0) * effects.get((threat.id, hypothesis.id), 1.0)
        if factor == 1.0:
            return hypothesis
        return hypothesis.with_occurrence(hypothesis.occurrence * factor)

    after = _assess(snapshot, config, report.timestamp, transform)
    logger.info(f"Applied {len(applied)} controls: total risk {report.total:.1f} -> {after.total:.1f}")
    return ResidualReport(report, after, applied)


def evaluate(snapshot: RegistrySnapshot, config: AssessmentConfig, timestamp: Optional[float] = None):
    """Assess a snapshot and, when it holds applied controls, add the residual view."""
    report = assess(snapshot, config, timestamp)
    if any(control.applied for control in snapshot.controls):
        return apply_controls(snapshot, report, config)
    return report
