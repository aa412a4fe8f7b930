#!/usr/bin/env python3

"""Judgment files and ranking output.

A judgment file is JSON::

    {
      "criteria": ["Traffic costs", "Number of regions"],
      "alternatives": ["AWS", "Azure", "GCP"],
      "criteria_matrix": [["3"]],
      "alternative_matrices": {"Traffic costs": [["2", "5"], ["3"]], ...}
    }

Matrices are given either in full or as their upper triangle (row ``i`` lists
the entries right of the diagonal); the lower triangle follows from
reciprocity. Entries may be numbers or fractions such as ``"1/3"``.
"""

import csv
import io
import json
import logging
from fractions import Fraction
from typing import Any, Dict, List, Sequence

from prettytable import PrettyTable

from decision.ahp import DecisionModel, PriorityVector, consistency_ratio, validate
from utils.errors import IoFailure, JudgmentError, NotSquare, UnsupportedSize

logger = logging.getLogger('risk_engine.judgments')


def parse_entry(value: Any) -> float:
    """Parse a judgment such as 3, 0.2 or "1/5"."""
    if isinstance(value, bool):
        raise JudgmentError(f"judgment must be a number, got {value!r}")
    try:
        return float(Fraction(str(value).strip()))
    except (ValueError, ZeroDivisionError) as e:
        raise JudgmentError(f"cannot parse judgment {value!r}: {e}")


def expand_matrix(rows: Sequence[Sequence[Any]], n: int) -> List[List[float]]:
    """Return a full n x n grid from a full or upper-triangle specification."""
    rows = [list(row) for row in rows]
    if len(rows) == n and all(len(row) == n for row in rows):
        return [[parse_entry(value) for value in row] for row in rows]

    if len(rows) == max(n - 1, 0) and all(len(row) == n - 1 - i for i, row in enumerate(rows)):
        grid = [[1.0] * n for _ in range(n)]
        for i, row in enumerate(rows):
            for offset, value in enumerate(row):
                j = i + 1 + offset
                entry = parse_entry(value)
                if entry <= 0:
                    raise JudgmentError(f"judgment a[{i}][{j}] must be positive")
                grid[i][j] = entry
                grid[j][i] = 1.0 / entry
        return grid

    raise NotSquare(f"matrix is neither a full {n}x{n} grid nor its upper triangle")


def build_model(data: Dict[str, Any], strict: bool = False) -> DecisionModel:
    """Build a validated DecisionModel from parsed judgment-file content."""
    try:
        criteria = list(data['criteria'])
        alternatives = list(data['alternatives'])
        criteria_rows = data['criteria_matrix']
        alternative_rows = data['alternative_matrices']
    except (KeyError, TypeError) as e:
        raise JudgmentError(f"judgment file is missing {e}")

    strict = bool(data.get('strict_scale', strict))
    criteria_matrix = validate(expand_matrix(criteria_rows, len(criteria)), criteria, strict=strict)

    matrices = {}
    for criterion, rows in alternative_rows.items():
        labels = rows.get('labels', alternatives) if isinstance(rows, dict) else alternatives
        grid = rows.get('matrix') if isinstance(rows, dict) else rows
        matrices[criterion] = validate(expand_matrix(grid, len(labels)), labels, strict=strict)

    return DecisionModel(criteria_matrix, matrices)


def load_judgments(path: str, strict: bool = False) -> DecisionModel:
    """Load a judgment file.

    Raises:
        IoFailure: the file cannot be read
        JudgmentError: the content is not a valid decision model
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        logger.error(f"Error reading judgments from {path}: {str(e)}")
        raise IoFailure(f"cannot read judgment file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise JudgmentError(f"{path} is not valid JSON: {e}") from e

    model = build_model(data, strict=strict)
    logger.info(f"Loaded {len(model.criteria.labels)} criteria and "
                f"{len(model.alternative_labels)} alternatives from {path}")
    return model


def consistency_report(model: DecisionModel, threshold: float) -> Dict[str, float]:
    """Consistency ratio of every matrix in the model, keyed by matrix name.

    Matrices larger than the random-index table are left out with a warning;
    they still take part in the ranking.
    """
    matrices = [('criteria', model.criteria)] + list(model.alternatives.items())
    ratios = {}
    for name, matrix in matrices:
        try:
            ratios[name] = consistency_ratio(matrix, threshold)
        except UnsupportedSize as e:
            logger.warning(f"Skipping consistency check of {name}: {e}")
    return ratios


def format_ranking(vector: PriorityVector, fmt: str = 'table', name: str = 'Alternative') -> str:
    """Weights with decimal and percentage columns, best first."""
    rows = vector.ranked()
    if fmt == 'json':
        return json.dumps([{'label': label, 'weight': weight, 'percentage': weight * 100}
                           for label, weight in rows], indent=2)
    if fmt == 'csv':
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(['label', 'weight', 'percentage'])
        for label, weight in rows:
            writer.writerow([label, repr(weight), repr(weight * 100)])
        return buffer.getvalue().rstrip('\n')

    table = PrettyTable([name, 'Value in decimals', 'Value in percentages'])
    for label, weight in rows:
        table.add_row([label, f"{weight:.3f}", f"{weight * 100:.1f}%"])
    table.align[name] = 'l'
    return table.get_string()

