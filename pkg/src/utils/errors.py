#!/usr/bin/env python3

"""Exception hierarchy shared by every package of the risk engine."""


class RiskEngineError(Exception):
    """Base exception for risk engine errors."""
    pass


class ConfigError(RiskEngineError, ValueError):
    """Configuration file or value is invalid."""
    pass


# Registry

class RegistryError(RiskEngineError):
    """Base exception for registry errors."""
    pass


class DanglingReference(RegistryError, ValueError):
    """A record references an asset, threat event or hypothesis that does not exist."""
    pass


class DuplicateId(RegistryError, ValueError):
    pass


class InvariantViolation(RegistryError, ValueError):
    """A record breaks one of its type invariants."""
    pass


class IoFailure(RegistryError, OSError):
    pass


class CorruptFile(RegistryError):
    """A registry file is truncated, malformed or fails its digest check."""
    pass


# Probability

class ProbabilityError(RiskEngineError, ValueError):
    pass


class EmptyHypotheses(ProbabilityError):
    pass


class OccurrenceMassExceeded(ProbabilityError):
    """Hypothesis occurrence probabilities of one event sum to more than one."""
    pass


class ZeroOpportunities(ProbabilityError):
    pass


# FAIR

class FairError(RiskEngineError, ValueError):
    pass


class NegativeRate(FairError):
    pass


class NegativeAmount(FairError):
    pass


class DimensionMismatch(FairError):
    pass


class InvalidScale(FairError):
    pass


class InvalidRiskMatrix(FairError):
    pass


# AHP

class JudgmentError(RiskEngineError, ValueError):
    """Base exception for judgment matrix errors."""
    pass


class NotSquare(JudgmentError):
    pass


class NonPositiveEntry(JudgmentError):
    pass


class BadDiagonal(JudgmentError):
    pass


class NotReciprocal(JudgmentError):
    pass


class ZeroColumn(JudgmentError):
    pass


class ScaleViolation(JudgmentError):
    """An entry lies outside the Saaty scale while strict mode is on."""
    pass


class LabelMismatch(JudgmentError):
    pass


class UnsupportedSize(JudgmentError):
    pass


# Engine and simulator

class DanglingControlTarget(RiskEngineError, ValueError):
    pass


class InvalidScenario(RiskEngineError, ValueError):
    pass
