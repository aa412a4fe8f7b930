#!/usr/bin/env python3

import json
import os
import shutil
import tempfile
import unittest

import numpy as np

# Add the src directory to the Python path
import sys
sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(__file__)), 'src'))

from decision.ahp import (
    SAATY_SCALE, DecisionModel, PriorityVector, column_sums, consistency_ratio, normalize, priority_vector,
    rank_alternatives, validate, weights_of,
)
from decision.judgments import (
    build_model, consistency_report, expand_matrix, format_ranking, load_judgments, parse_entry,
)
from utils.errors import (
    BadDiagonal, IoFailure, JudgmentError, LabelMismatch, NonPositiveEntry, NotReciprocal, NotSquare,
    ScaleViolation, UnsupportedSize, ZeroColumn,
)

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'fixtures')

# Column-normalized criteria matrix of the cloud provider choice
CLOUD_NORMALIZED = [
    [0.045, 0.016, 0.025, 0.076, 0.115],
    [0.268, 0.096, 0.059, 0.101, 0.192],
    [0.313, 0.289, 0.179, 0.152, 0.308],
    [0.358, 0.578, 0.716, 0.606, 0.346],
    [0.015, 0.019, 0.022, 0.067, 0.038],
]
CLOUD_WEIGHTS = (0.055, 0.143, 0.248, 0.521, 0.032)


def random_judgments(rng: np.random.Generator, n: int) -> np.ndarray:
    matrix = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            value = SAATY_SCALE[int(rng.integers(len(SAATY_SCALE)))]
            matrix[i, j] = value
            matrix[j, i] = 1.0 / value
    return matrix


class TestPriorityVector(unittest.TestCase):
    """Column normalization and row averaging."""

    def test_reproduces_cloud_criteria_weights(self):
        vector = priority_vector(CLOUD_NORMALIZED)
        for weight, expected in zip(vector.weights, CLOUD_WEIGHTS):
            self.assertAlmostEqual(weight, expected, delta=0.001)
        self.assertGreaterEqual(sum(vector.weights), 0.997)
        self.assertLessEqual(sum(vector.weights), 1.003)

    def test_column_sums(self):
        np.testing.assert_allclose(column_sums([[1, 3], [1 / 3, 1]]), [4 / 3, 4])

    def test_identity_judgments(self):
        vector = weights_of(validate(np.ones((4, 4))))
        np.testing.assert_allclose(vector.weights, [0.25] * 4)

    def test_consistent_matrices_recover_weights(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(3, 8))
            w = rng.uniform(0.05, 1.0, size=n)
            w = w / w.sum()
            matrix = np.outer(w, 1.0 / w)
            vector = priority_vector(normalize(matrix))
            np.testing.assert_allclose(vector.weights, w, atol=1e-9, rtol=0)
            self.assertLess(consistency_ratio(matrix), 1e-6)

    def test_random_valid_matrices(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            n = int(rng.integers(2, 9))
            matrix = validate(random_judgments(rng, n), strict=True)
            normalized = normalize(matrix)
            np.testing.assert_allclose(normalized.sum(axis=0), np.ones(n), atol=1e-12, rtol=0)
            np.testing.assert_allclose(matrix.values * matrix.values.T, np.ones((n, n)), atol=1e-9, rtol=0)
            self.assertAlmostEqual(sum(weights_of(matrix).weights), 1.0, delta=1e-12)

    def test_deviating_columns_warn(self):
        with self.assertLogs('risk_engine.ahp', level='WARNING'):
            priority_vector([[0.5, 0.5], [0.4, 0.5]])

    def test_ranked_and_best(self):
        vector = PriorityVector(('A', 'B', 'C'), (0.2, 0.5, 0.3))
        self.assertEqual(vector.ranked(), [('B', 0.5), ('C', 0.3), ('A', 0.2)])
        self.assertEqual(vector.best, 'B')

    def test_rejects_bad_sum(self):
        with self.assertRaises(JudgmentError):
            PriorityVector(('A', 'B'), (0.5, 0.6))


class TestValidation(unittest.TestCase):
    """Each kind of broken judgment matrix is rejected with its own error."""

    def setUp(self):
        self.matrix = random_judgments(np.random.default_rng(5), 4)

    def mutated(self, **changes):
        matrix = self.matrix.copy()
        for (i, j), value in changes.get('cells', {}).items():
            matrix[i, j] = value
        return matrix

    def test_mutation_operators(self):
        operators = [
            ('drop column', self.matrix[:, :3], NotSquare),
            ('empty', np.zeros((0, 0)), NotSquare),
            ('flat', np.ones(4), NotSquare),
            ('zero entry', self.mutated(cells={(0, 1): 0.0}), NonPositiveEntry),
            ('negative entry', self.mutated(cells={(2, 3): -3.0, (3, 2): -1 / 3}), NonPositiveEntry),
            ('infinite entry', self.mutated(cells={(1, 2): np.inf}), NonPositiveEntry),
            ('diagonal', self.mutated(cells={(2, 2): 2.0}), BadDiagonal),
            ('scaled entry', self.mutated(cells={(0, 3): self.matrix[0, 3] * 2}), NotReciprocal),
            ('symmetric pair', self.mutated(cells={(1, 3): 3.0, (3, 1): 3.0}), NotReciprocal),
            ('off scale', self.mutated(cells={(0, 2): 2.5, (2, 0): 0.4}), ScaleViolation),
        ]
        for name, matrix, error in operators:
            with self.subTest(operator=name):
                with self.assertRaises(error):
                    validate(matrix, strict=True)

    def test_off_scale_warns_when_lenient(self):
        with self.assertLogs('risk_engine.ahp', level='WARNING'):
            validate(self.mutated(cells={(0, 2): 2.5, (2, 0): 0.4}))

    def test_labels(self):
        with self.assertRaises(LabelMismatch):
            validate(self.matrix, labels=['a', 'b', 'c'])
        with self.assertRaises(LabelMismatch):
            validate(self.matrix, labels=['a', 'a', 'b', 'c'])
        self.assertEqual(validate(self.matrix).labels, ('C1', 'C2', 'C3', 'C4'))

    def test_validated_matrix_is_read_only(self):
        matrix = validate(self.matrix)
        with self.assertRaises(ValueError):
            matrix.values[0, 1] = 7.0

    def test_zero_column(self):
        with self.assertRaises(ZeroColumn):
            normalize([[1.0, 0.0], [2.0, 0.0]])


class TestConsistency(unittest.TestCase):
    def test_small_matrices(self):
        self.assertEqual(consistency_ratio([[1.0]]), 0.0)
        self.assertEqual(consistency_ratio([[1.0, 9.0], [1 / 9, 1.0]]), 0.0)

    def test_cyclic_judgments(self):
        matrix = validate([[1, 9, 1 / 9], [1 / 9, 1, 9], [9, 1 / 9, 1]])
        with self.assertLogs('risk_engine.ahp', level='WARNING'):
            ratio = consistency_ratio(matrix)
        self.assertGreater(ratio, 0.1)

    def test_unsupported_size(self):
        with self.assertRaises(UnsupportedSize):
            consistency_ratio(np.ones((11, 11)))

    def test_consistency_report_covers_every_matrix(self):
        model = load_judgments(os.path.join(FIXTURES, 'cloud_judgments.json'))
        ratios = consistency_report(model, threshold=1.0)
        self.assertEqual(set(ratios), {'criteria'} | set(model.criteria.labels))
        for ratio in ratios.values():
            self.assertGreaterEqual(ratio, 0.0)
        # The criteria judgments stay near the usual 0.1 limit
        self.assertLess(ratios['criteria'], 0.2)

    def test_consistency_report_skips_oversized_matrices(self):
        labels = [f"c{i}" for i in range(11)]
        model = DecisionModel(validate(np.ones((11, 11)), labels),
                              {label: validate(np.ones((3, 3)), ['A', 'B', 'C']) for label in labels})
        with self.assertLogs('risk_engine.judgments', level='WARNING'):
            ratios = consistency_report(model, threshold=0.1)
        self.assertNotIn('criteria', ratios)
        self.assertEqual(set(ratios), set(labels))
        for weight in rank_alternatives(model).weights:
            self.assertAlmostEqual(weight, 1 / 3, delta=1e-12)


class TestDecisionModel(unittest.TestCase):
    """Global alternative weights from criteria and alternative judgments."""

    def test_cloud_providers(self):
        model = load_judgments(os.path.join(FIXTURES, 'cloud_judgments.json'))
        criteria = weights_of(model.criteria)
        for weight, expected in zip(criteria.weights, CLOUD_WEIGHTS):
            self.assertAlmostEqual(weight, expected, delta=0.001)

        ranking = rank_alternatives(model)
        self.assertEqual([label for label, _ in ranking.ranked()], ['AWS', 'Azure', 'GCP'])
        self.assertAlmostEqual(sum(ranking.weights), 1.0, delta=1e-9)

    def test_uniform_judgments(self):
        ranking = rank_alternatives(load_judgments(os.path.join(FIXTURES, 'uniform_judgments.json')))
        for weight in ranking.weights:
            self.assertAlmostEqual(weight, 1 / 3, delta=1e-12)

    def test_alternative_order_does_not_matter(self):
        with open(os.path.join(FIXTURES, 'cloud_judgments.json'), encoding='utf-8') as f:
            data = json.load(f)
        baseline = rank_alternatives(build_model(data)).as_dict()

        # Same judgments with GCP, AWS, Azure as the order of one criterion
        data['alternative_matrices']['Traffic costs'] = {
            'labels': ['GCP', 'AWS', 'Azure'],
            'matrix': [['1/5', '1/4'], [2]],
        }
        reordered = rank_alternatives(build_model(data)).as_dict()
        for label, weight in baseline.items():
            self.assertAlmostEqual(reordered[label], weight, delta=1e-12)

    def test_criteria_order_does_not_matter(self):
        rng = np.random.default_rng(9)
        criteria = random_judgments(rng, 3)
        alternatives = [random_judgments(rng, 4) for _ in range(3)]
        labels = ['cost', 'regions', 'security']
        names = ['A', 'B', 'C', 'D']

        model = DecisionModel(validate(criteria, labels),
                              {label: validate(m, names) for label, m in zip(labels, alternatives)})
        order = [2, 0, 1]
        permuted = DecisionModel(validate(criteria[np.ix_(order, order)], [labels[i] for i in order]),
                                 {label: validate(m, names) for label, m in zip(labels, alternatives)})
        np.testing.assert_allclose(rank_alternatives(model).weights, rank_alternatives(permuted).weights,
                                   atol=1e-12)

    def test_random_permutations_preserve_global_weights(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            k = int(rng.integers(2, 7))
            m = int(rng.integers(2, 7))
            criteria = random_judgments(rng, k)
            alternatives = [random_judgments(rng, m) for _ in range(k)]
            labels = [f"c{i}" for i in range(k)]
            names = [f"a{j}" for j in range(m)]
            model = DecisionModel(validate(criteria, labels),
                                  {label: validate(a, names) for label, a in zip(labels, alternatives)})

            criteria_order = rng.permutation(k)
            alternative_order = rng.permutation(m)
            permuted = DecisionModel(
                validate(criteria[np.ix_(criteria_order, criteria_order)], [labels[i] for i in criteria_order]),
                {labels[i]: validate(alternatives[i][np.ix_(alternative_order, alternative_order)],
                                     [names[j] for j in alternative_order])
                 for i in range(k)})

            baseline = rank_alternatives(model).as_dict()
            reordered = rank_alternatives(permuted).as_dict()
            self.assertEqual(set(reordered), set(baseline))
            for label, weight in baseline.items():
                self.assertAlmostEqual(reordered[label], weight, delta=1e-12)

    def test_rescaled_local_weights_keep_best_alternative(self):
        rng = np.random.default_rng(33)

        def model_of(criteria, local, labels, names):
            return DecisionModel(validate(criteria, labels),
                                 {label: validate(np.outer(w, 1.0 / w), names) for label, w in zip(labels, local)})

        for _ in range(200):
            k = int(rng.integers(2, 6))
            m = int(rng.integers(2, 6))
            labels = [f"c{i}" for i in range(k)]
            names = [f"a{j}" for j in range(m)]
            criteria = random_judgments(rng, k)
            local = [rng.uniform(0.05, 1.0, size=m) for _ in range(k)]
            baseline = rank_alternatives(model_of(criteria, local, labels, names))

            scaled = list(local)
            target = int(rng.integers(k))
            scaled[target] = local[target] * rng.uniform(0.1, 10.0)
            rescaled = rank_alternatives(model_of(criteria, scaled, labels, names))

            np.testing.assert_allclose(rescaled.weights, baseline.weights, atol=1e-9, rtol=0)
            self.assertEqual(rescaled.best, baseline.best)

    def test_normalization_ignores_uniform_scaling(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            matrix = random_judgments(rng, int(rng.integers(2, 9)))
            factor = rng.uniform(0.01, 100.0)
            np.testing.assert_allclose(normalize(matrix * factor), normalize(matrix), atol=1e-12, rtol=0)

    def test_label_mismatch(self):
        labels = ['cost', 'security']
        with self.assertRaises(LabelMismatch):
            DecisionModel(validate(np.ones((2, 2)), labels), {'cost': validate(np.ones((2, 2)), ['A', 'B'])})
        with self.assertRaises(LabelMismatch):
            DecisionModel(validate(np.ones((2, 2)), labels),
                          {'cost': validate(np.ones((2, 2)), ['A', 'B']),
                           'security': validate(np.ones((2, 2)), ['A', 'C'])})


class TestJudgmentFiles(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_parse_entry(self):
        self.assertAlmostEqual(parse_entry('1/3'), 1 / 3)
        self.assertEqual(parse_entry(5), 5.0)
        self.assertEqual(parse_entry(' 0.2 '), 0.2)
        for bad in ('three', True, '1/0'):
            with self.assertRaises(JudgmentError):
                parse_entry(bad)

    def test_expand_upper_triangle(self):
        grid = expand_matrix([[3, '1/5'], [2]], 3)
        np.testing.assert_allclose(grid, [[1, 3, 0.2], [1 / 3, 1, 2], [5, 0.5, 1]])

    def test_expand_full_grid(self):
        self.assertEqual(expand_matrix([[1, 2], ['1/2', 1]], 2), [[1.0, 2.0], [0.5, 1.0]])

    def test_expand_wrong_shape(self):
        with self.assertRaises(NotSquare):
            expand_matrix([[1, 2], [3]], 2)

    def test_missing_sections(self):
        with self.assertRaises(JudgmentError):
            build_model({'criteria': ['a']})

    def test_missing_file(self):
        with self.assertRaises(IoFailure):
            load_judgments(os.path.join(self.test_dir, 'absent.json'))

    def test_bad_json(self):
        path = os.path.join(self.test_dir, 'broken.json')
        with open(path, 'w', encoding='utf-8') as f:
            f.write('{"criteria": [')
        with self.assertRaises(JudgmentError):
            load_judgments(path)

    def test_format_ranking(self):
        vector = PriorityVector(('AWS', 'Azure', 'GCP'), (0.509, 0.336, 0.155))
        table = format_ranking(vector)
        self.assertIn('Value in decimals', table)
        self.assertIn('Value in percentages', table)
        self.assertIn('50.9%', table)
        self.assertIn('0.336', table)

        rows = json.loads(format_ranking(vector, 'json'))
        self.assertEqual([row['label'] for row in rows], ['AWS', 'Azure', 'GCP'])

        csv_lines = format_ranking(vector, 'csv').splitlines()
        self.assertEqual(csv_lines[0], 'label,weight,percentage')
        self.assertEqual(len(csv_lines), 4)


if __name__ == '__main__':
    unittest.main()
