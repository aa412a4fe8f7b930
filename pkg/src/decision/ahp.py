#!/usr/bin/env python3

"""Analytic hierarchy process.

Priorities come from the column-normalize, row-average method; the principal
eigenvalue is only used for the consistency ratio.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from utils.errors import (
    BadDiagonal, JudgmentError, LabelMismatch, NonPositiveEntry, NotReciprocal, NotSquare,
    ScaleViolation, UnsupportedSize, ZeroColumn,
)

logger = logging.getLogger('risk_engine.ahp')

RECIPROCITY_TOLERANCE = 1e-9

# Weight sums tolerate weights rounded to 3 decimals
ROUNDING_TOLERANCE = 5e-3

# Random consistency index by matrix size
RANDOM_INDEX = {1: 0.00, 2: 0.00, 3: 0.58, 4: 0.90, 5: 1.12,
                6: 1.24, 7: 1.32, 8: 1.41, 9: 1.45, 10: 1.49}

CONSISTENCY_THRESHOLD = 0.1

SAATY_SCALE = tuple(float(Fraction(value)) for value in range(1, 10)) + \
    tuple(float(Fraction(1, value)) for value in range(2, 10))

MatrixLike = Union['JudgmentMatrix', np.ndarray, Sequence[Sequence[float]]]


@dataclass(frozen=True, eq=False)
class JudgmentMatrix:
    """Reciprocal pairwise comparison matrix with row/column labels."""

    labels: Tuple[str, ...]
    values: np.ndarray

    @property
    def size(self) -> int:
        return len(self.labels)

    def reordered(self, labels: Sequence[str]) -> 'JudgmentMatrix':
        """The same judgments with rows and columns in another label order."""
        if sorted(labels) != sorted(self.labels):
            raise LabelMismatch(f"cannot reorder {list(self.labels)} as {list(labels)}")
        index = [self.labels.index(label) for label in labels]
        values = self.values[np.ix_(index, index)].copy()
        values.setflags(write=False)
        return JudgmentMatrix(tuple(labels), values)


@dataclass(frozen=True, eq=False)
class PriorityVector:
    """Normalized weights; the sum is one within the rounding tolerance."""

    labels: Tuple[str, ...]
    weights: Tuple[float, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.weights):
            raise LabelMismatch("priority vector needs one weight per label")
        if any(weight < 0 for weight in self.weights):
            raise JudgmentError("priority weights must be non-negative")
        if self.weights and abs(sum(self.weights) - 1.0) > ROUNDING_TOLERANCE:
            raise JudgmentError(f"priority weights sum to {sum(self.weights):.6f}, not 1")

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.labels, self.weights))

    def ranked(self) -> List[Tuple[str, float]]:
        """Labels by descending weight; ties keep input order."""
        return sorted(zip(self.labels, self.weights), key=lambda item: -item[1])

    @property
    def best(self) -> str:
        return self.ranked()[0][0]


def _as_array(matrix: MatrixLike) -> np.ndarray:
    if isinstance(matrix, JudgmentMatrix):
        return matrix.values
    try:
        array = np.array(matrix, dtype=float)
    except (TypeError, ValueError) as e:
        raise NotSquare(f"judgment matrix is not a numeric grid: {e}")
    return array


def validate(matrix: MatrixLike, labels: Optional[Sequence[str]] = None, strict: bool = False) -> JudgmentMatrix:
    """Check a judgment matrix and return it as a labelled, read-only JudgmentMatrix.

    Args:
        matrix: Square grid of positive judgments
        labels: Row/column labels, ``C1..Cn`` by default
        strict: Reject entries outside the Saaty scale instead of warning

    Raises:
        NotSquare, NonPositiveEntry, BadDiagonal, NotReciprocal, ScaleViolation
    """
    if labels is None and isinstance(matrix, JudgmentMatrix):
        labels = matrix.labels
    array = _as_array(matrix)

    if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] == 0:
        raise NotSquare(f"judgment matrix must be square and non-empty, got shape {array.shape}")
    n = array.shape[0]

    if not np.all(np.isfinite(array)) or np.any(array <= 0):
        raise NonPositiveEntry("judgment matrix entries must be finite and positive")

    diagonal = np.diag(array)
    if np.any(np.abs(diagonal - 1.0) > RECIPROCITY_TOLERANCE):
        raise BadDiagonal(f"diagonal entries must equal 1, got {diagonal.tolist()}")

    products = array * array.T
    broken = np.argwhere(np.abs(products - 1.0) > RECIPROCITY_TOLERANCE)
    if broken.size:
        i, j = broken[0]
        raise NotReciprocal(f"a[{i}][{j}]={array[i, j]:g} is not the reciprocal of a[{j}][{i}]={array[j, i]:g}")

    off_scale = [(i, j) for i in range(n) for j in range(n)
                 if not any(abs(array[i, j] - value) <= RECIPROCITY_TOLERANCE for value in SAATY_SCALE)]
    if off_scale:
        i, j = off_scale[0]
        message = f"{len(off_scale)} entries lie outside the Saaty scale, e.g. a[{i}][{j}]={array[i, j]:g}"
        if strict:
            raise ScaleViolation(message)
        logger.warning(message)

    if labels is None:
        labels = [f"C{i + 1}" for i in range(n)]
    labels = tuple(labels)
    if len(labels) != n or len(set(labels)) != n:
        raise LabelMismatch(f"need {n} distinct labels, got {list(labels)}")

    values = array.copy()
    values.setflags(write=False)
    return JudgmentMatrix(labels, values)


def column_sums(matrix: MatrixLike) -> np.ndarray:
    """S_j = sum_i a_ij."""
    return _as_array(matrix).sum(axis=0)


def normalize(matrix: MatrixLike) -> np.ndarray:
    """Divide every entry by its column sum.

    Raises:
        ZeroColumn: a column sums to zero or less
    """
    array = _as_array(matrix)
    sums = column_sums(array)
    if np.any(sums <= 0):
        raise ZeroColumn("every column of a judgment matrix must have a positive sum")
    return array / sums


def priority_vector(normalized: Union[np.ndarray, Sequence[Sequence[float]]],
                    labels: Optional[Sequence[str]] = None,
                    tolerance: float = ROUNDING_TOLERANCE) -> PriorityVector:
    """Row means of a column-normalized matrix.

    Args:
        normalized: Grid whose columns sum to one within ``tolerance``
        labels: Row labels, ``C1..Cn`` by default
        tolerance: Allowed column-sum deviation before a warning
    """
    grid = np.array(normalized, dtype=float)
    deviation = np.abs(grid.sum(axis=0) - 1.0)
    if np.any(deviation > tolerance):
        logger.warning(f"normalized columns deviate from 1 by up to {deviation.max():.4f}")

    weights = grid.mean(axis=1)
    if labels is None:
        labels = [f"C{i + 1}" for i in range(grid.shape[0])]
    return PriorityVector(tuple(labels), tuple(float(weight) for weight in weights))


def weights_of(matrix: JudgmentMatrix) -> PriorityVector:
    """Priority vector of a validated judgment matrix."""
    return priority_vector(normalize(matrix), matrix.labels)


def consistency_ratio(matrix: MatrixLike, threshold: float = CONSISTENCY_THRESHOLD) -> float:
    """CR = ((lambda_max - n) / (n - 1)) / RI_n; 0 for matrices up to 2x2.

    Logs a warning when the ratio is above ``threshold``.

    Raises:
        UnsupportedSize: more than 10 rows
    """
    array = _as_array(matrix)
    n = array.shape[0]
    if n > max(RANDOM_INDEX):
        raise UnsupportedSize(f"consistency ratio needs n <= {max(RANDOM_INDEX)}, got {n}")
    if n <= 2:
        return 0.0

    lambda_max = float(np.max(np.real(np.linalg.eigvals(array))))
    index = (lambda_max - n) / (n - 1)
    ratio = max(0.0, index / RANDOM_INDEX[n])
    if ratio > threshold:
        name = ', '.join(matrix.labels) if isinstance(matrix, JudgmentMatrix) else f"{n}x{n} matrix"
        logger.warning(f"Judgments over {name} are inconsistent: CR={ratio:.3f} > {threshold}")
    return ratio


@dataclass(frozen=True, eq=False)
class DecisionModel:
    """Criteria judgments plus one alternative judgment matrix per criterion.

    Alternative matrices are stored in the label order of the first one.
    """

    criteria: JudgmentMatrix
    alternatives: Mapping[str, JudgmentMatrix]

    def __post_init__(self):
        if set(self.alternatives) != set(self.criteria.labels):
            raise LabelMismatch(f"alternative matrices {sorted(self.alternatives)} do not match "
                                f"criteria {list(self.criteria.labels)}")
        first = self.alternatives[self.criteria.labels[0]].labels
        ordered = {}
        for criterion in self.criteria.labels:
            matrix = self.alternatives[criterion]
            if set(matrix.labels) != set(first) or len(matrix.labels) != len(first):
                raise LabelMismatch(f"alternatives under {criterion!r} are {list(matrix.labels)}, "
                                    f"expected {list(first)}")
            ordered[criterion] = matrix if matrix.labels == first else matrix.reordered(first)
        object.__setattr__(self, 'alternatives', ordered)

    @property
    def alternative_labels(self) -> Tuple[str, ...]:
        return self.alternatives[self.criteria.labels[0]].labels


def local_weights(model: DecisionModel) -> np.ndarray:
    """k x m matrix; column c holds the alternative weights under criterion c."""
    columns = [weights_of(model.alternatives[criterion]).weights for criterion in model.criteria.labels]
    return np.array(columns, dtype=float).T


def rank_alternatives(model: DecisionModel) -> PriorityVector:
    """Global alternative weights: local weight matrix times the criteria weights."""
    criteria_weights = np.array(weights_of(model.criteria).weights, dtype=float)
    global_weights = local_weights(model) @ criteria_weights
    vector = PriorityVector(model.alternative_labels, tuple(float(weight) for weight in global_weights))
    logger.info(f"Ranked {len(vector.labels)} alternatives; best is {vector.best}")
    return vector
