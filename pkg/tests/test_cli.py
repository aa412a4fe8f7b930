#!/usr/bin/env python3

import json
import os
import shutil
import tempfile
import unittest
from unittest.mock import patch

from click.testing import CliRunner

# Add the src directory to the Python path
import sys
sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(__file__)), 'src'))

import main
from main import ExitPolicy, cli, run
from registry.persistence import load, read_events
from utils.errors import ConfigError

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'fixtures')
REGISTRY = os.path.join(FIXTURES, 'cloud_registry.txt')
SCENARIO = os.path.join(FIXTURES, 'cloud_scenario.json')


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner(mix_stderr=False)
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def invoke(self, *args):
        return self.runner.invoke(cli, list(args))

    def temp_path(self, name):
        return os.path.join(self.test_dir, name)


class TestAssessCommand(CliTestCase):
    """One-shot assessment and the risk gate."""

    def test_table_output(self):
        result = self.invoke('assess', '--registry', REGISTRY)
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertIn('Probability', result.stdout)
        self.assertIn('Risk assessment', result.stdout)
        for value in ('0.77', '0.68', '0.81', '4184.6', '3819.3', '4475.5'):
            self.assertIn(value, result.stdout)
        self.assertIn('Total risk R = 12479.4', result.stdout)

    def test_gate_breached(self):
        result = self.invoke('assess', '--registry', REGISTRY, '--gate', '10000')
        self.assertEqual(result.exit_code, 2)
        self.assertIn('Risk gate 10000.0: BREACHED', result.stdout)

    def test_gate_passed(self):
        result = self.invoke('assess', '--registry', REGISTRY, '--gate', '13000')
        self.assertEqual(result.exit_code, 0)
        self.assertIn('Risk gate 13000.0: passed', result.stdout)

    def test_json_matches_table(self):
        as_json = json.loads(self.invoke('assess', '--registry', REGISTRY, '--format', 'json').stdout)
        table = self.invoke('assess', '--registry', REGISTRY).stdout
        for entry in as_json['dimensions']:
            self.assertIn(f"{entry['probability']:.2f}", table)
            self.assertIn(f"{entry['risk']:.1f}", table)
        self.assertEqual(as_json['kind'], 'risk')

    def test_csv_output(self):
        result = self.invoke('assess', '--registry', REGISTRY, '--format', 'csv')
        lines = result.stdout.strip().splitlines()
        self.assertEqual(lines[0], 'dimension,probability,loss,risk')
        self.assertEqual([line.split(',')[0] for line in lines[1:]],
                         ['confidentiality', 'integrity', 'availability'])

    def test_gate_from_config(self):
        config = self.temp_path('config.json')
        with open(config, 'w') as f:
            json.dump({'assessment': {'gate_threshold': 10000}}, f)
        result = self.invoke('assess', '--registry', REGISTRY, '--config', config)
        self.assertEqual(result.exit_code, 2)

    def test_malformed_registry(self):
        path = self.temp_path('broken.txt')
        with open(path, 'w') as f:
            f.write('not a registry\n')
        result = self.invoke('assess', '--registry', path)
        self.assertEqual(result.exit_code, 1)
        self.assertIn('Error', result.stderr)

    def test_missing_registry(self):
        result = self.invoke('assess', '--registry', self.temp_path('absent.txt'))
        self.assertEqual(result.exit_code, 1)

    def test_missing_config(self):
        result = self.invoke('assess', '--registry', REGISTRY, '--config', self.temp_path('absent.json'))
        self.assertEqual(result.exit_code, 1)

    def test_usage_errors(self):
        self.assertEqual(self.invoke('frobnicate').exit_code, 1)
        self.assertEqual(self.invoke('assess', '--registry', REGISTRY, '--format', 'yaml').exit_code, 1)
        self.assertEqual(self.invoke('assess').exit_code, 1)

    def test_internal_failure(self):
        with patch.object(main, 'evaluate', side_effect=RuntimeError('boom')):
            result = self.invoke('assess', '--registry', REGISTRY)
        self.assertEqual(result.exit_code, 3)
        self.assertIn('Internal error', result.stderr)

    def test_report_file_round_trip(self):
        out = self.temp_path('reports.jsonl')
        self.assertEqual(self.invoke('assess', '--registry', REGISTRY, '--out', out, '--format', 'json').exit_code, 0)
        result = self.invoke('report', out, '--format', 'csv')
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertTrue(result.stdout.startswith('dimension,probability,loss,risk'))

    def test_report_without_reports(self):
        path = self.temp_path('empty.jsonl')
        with open(path, 'w') as f:
            f.write(json.dumps({'kind': 'failure', 'message': 'feed offline'}) + '\n')
        self.assertEqual(self.invoke('report', path).exit_code, 1)


class TestRegistryCommands(CliTestCase):
    """Registry editing through the command line."""

    def test_add_show_remove(self):
        path = self.temp_path('registry.txt')
        steps = [
            ('asset', '{"id": "web", "name": "Web front end", "kind": "component"}'),
            ('threat', '{"id": "ddos", "asset_id": "web", "dimension": "availability", "base_loss": "4000",'
                       ' "hypotheses": [{"id": "flood", "occurrence": 1.0, "conditional_breach": 0.5}]}'),
            ('control', '{"id": "cdn", "threat_id": "ddos", "effect": 0.5}'),
            ('event', '[{"timestamp": 10, "dimension": "availability", "asset_id": "web"},'
                      ' {"timestamp": 20, "dimension": "availability", "asset_id": "web"}]'),
        ]
        for kind, data in steps:
            result = self.invoke('registry', 'add', kind, '--registry', path, '--data', data)
            self.assertEqual(result.exit_code, 0, result.stderr)

        result = self.invoke('registry', 'add', 'hypothesis', '--registry', path, '--parent', 'ddos',
                             '--data', '{"id": "botnet", "occurrence": 0.0, "conditional_breach": 0.9}')
        self.assertEqual(result.exit_code, 0, result.stderr)
        snapshot = load(path)
        self.assertEqual(snapshot.version, 5)
        self.assertEqual(len(snapshot.threat('ddos').hypotheses), 2)
        self.assertEqual(len(snapshot.monitor_events), 2)

        shown = json.loads(self.invoke('registry', 'show', '--registry', path, '--format', 'json').stdout)
        self.assertEqual(shown['version'], 5)
        self.assertEqual(shown['digest'], snapshot.content_digest)
        self.assertEqual([record['type'] for record in shown['records']],
                         ['asset', 'threat', 'control', 'event', 'event'])
        self.assertIn('Registry version 5', self.invoke('registry', 'show', '--registry', path).stdout)

        self.assertEqual(self.invoke('registry', 'rm', 'control', 'cdn', '--registry', path).exit_code, 0)
        self.assertEqual(self.invoke('registry', 'rm', 'event', '15', '--registry', path).exit_code, 0)
        snapshot = load(path)
        self.assertEqual(snapshot.controls, ())
        self.assertEqual([event.timestamp for event in snapshot.monitor_events], [20.0])

    def test_replace_updates_record(self):
        path = self.temp_path('registry.txt')
        self.invoke('registry', 'add', 'asset', '--registry', path,
                    '--data', '{"id": "web", "name": "Web", "kind": "component"}')
        result = self.invoke('registry', 'add', 'asset', '--registry', path, '--replace',
                             '--data', '{"id": "web", "name": "Storefront", "kind": "software"}')
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertEqual(load(path).asset('web').name, 'Storefront')

    def test_rejected_mutations_leave_file_untouched(self):
        path = self.temp_path('registry.txt')
        shutil.copy(REGISTRY, path)
        before = load(path)
        result = self.invoke('registry', 'add', 'threat', '--registry', path,
                             '--data', '{"id": "t", "asset_id": "ghost", "dimension": "integrity"}')
        self.assertEqual(result.exit_code, 1)
        self.assertEqual(self.invoke('registry', 'add', 'asset', '--registry', path, '--data', '{').exit_code, 1)
        self.assertEqual(self.invoke('registry', 'rm', 'asset', 'ghost', '--registry', path).exit_code, 1)
        self.assertEqual(load(path), before)


class TestAhpCommands(CliTestCase):
    def test_uniform_ranking(self):
        result = self.invoke('ahp', 'rank', os.path.join(FIXTURES, 'uniform_judgments.json'))
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertEqual(result.stdout.count('0.333'), 3)
        self.assertIn('Value in percentages', result.stdout)

    def test_cloud_ranking_json(self):
        result = self.invoke('ahp', 'rank', os.path.join(FIXTURES, 'cloud_judgments.json'), '--format', 'json')
        self.assertEqual(result.exit_code, 0, result.stderr)
        ranking = json.loads(result.stdout)
        self.assertEqual([row['label'] for row in ranking], ['AWS', 'Azure', 'GCP'])
        self.assertAlmostEqual(sum(row['weight'] for row in ranking), 1.0)

    def test_criteria_weights(self):
        result = self.invoke('ahp', 'weights', os.path.join(FIXTURES, 'cloud_judgments.json'), '--format', 'json')
        self.assertEqual(result.exit_code, 0, result.stderr)
        top = json.loads(result.stdout)[0]
        self.assertEqual(top['label'], 'Number of security services')
        self.assertAlmostEqual(top['weight'], 0.521, delta=0.001)

    def test_invalid_judgments(self):
        path = self.temp_path('judgments.json')
        with open(path, 'w') as f:
            json.dump({'criteria': ['Cost', 'Security'], 'alternatives': ['A', 'B'],
                       'criteria_matrix': [[-2]], 'alternative_matrices': {}}, f)
        self.assertEqual(self.invoke('ahp', 'rank', path).exit_code, 1)

    def test_ranking_with_eleven_criteria(self):
        criteria = [f"Criterion {i}" for i in range(11)]
        path = self.temp_path('judgments.json')
        with open(path, 'w') as f:
            json.dump({'criteria': criteria, 'alternatives': ['A', 'B'],
                       'criteria_matrix': [[1] * (10 - i) for i in range(10)],
                       'alternative_matrices': {name: [[3]] for name in criteria}}, f)
        result = self.invoke('ahp', 'rank', path, '--format', 'json')
        self.assertEqual(result.exit_code, 0, result.stderr)
        ranking = json.loads(result.stdout)
        self.assertEqual(ranking[0]['label'], 'A')
        self.assertAlmostEqual(ranking[0]['weight'], 0.75)


class TestSimulateAndWatch(CliTestCase):
    """Event generation and the watch loop on a simulated clock."""

    def setUp(self):
        super().setUp()
        self.registry = self.temp_path('registry.txt')
        shutil.copy(REGISTRY, self.registry)

    def test_simulate_to_stdout(self):
        first = self.invoke('simulate', SCENARIO)
        second = self.invoke('simulate', SCENARIO)
        self.assertEqual(first.exit_code, 0, first.stderr)
        self.assertEqual(first.stdout, second.stdout)
        self.assertTrue(all(line.startswith('EVENT\t') for line in first.stdout.splitlines()))
        self.assertNotEqual(first.stdout, self.invoke('simulate', SCENARIO, '--seed', '7').stdout)

    def test_simulate_then_watch_events(self):
        events = self.temp_path('events.txt')
        result = self.invoke('simulate', SCENARIO, '--out', events)
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertIn('Wrote', result.stderr)
        generated = read_events(events)
        self.assertTrue(generated)

        result = self.invoke('watch', '--registry', self.registry, '--events', events, '--format', 'json',
                             '--interval', '7200', '--max-ticks', '4')
        self.assertEqual(result.exit_code, 0, result.stderr)
        reports = [json.loads(line) for line in result.stdout.splitlines()]
        self.assertEqual(len(reports), 4)
        versions = [report['snapshot_version'] for report in reports]
        self.assertEqual(versions, sorted(versions))
        # Ingested events are written back to the registry file
        self.assertEqual(len(load(self.registry).monitor_events), len(generated))

    def test_watch_scenario_gate(self):
        result = self.invoke('watch', '--registry', self.registry, '--scenario', SCENARIO, '--format', 'csv',
                             '--interval', '3600', '--max-ticks', '2', '--gate', '1')
        self.assertEqual(result.exit_code, 2)
        self.assertEqual(result.stdout.count('dimension,probability,loss,risk'), 2)

    def test_watch_writes_report_file(self):
        out = self.temp_path('reports.jsonl')
        result = self.invoke('watch', '--registry', self.registry, '--max-ticks', '2', '--interval', '0.01',
                             '--out', out)
        self.assertEqual(result.exit_code, 0, result.stderr)
        with open(out) as f:
            reports = [json.loads(line) for line in f]
        self.assertEqual(len(reports), 2)
        self.assertEqual(reports[0]['total'], reports[1]['total'])

    def test_watch_rejects_two_sources(self):
        result = self.invoke('watch', '--registry', self.registry, '--scenario', SCENARIO, '--events', SCENARIO)
        self.assertEqual(result.exit_code, 1)


class TestEntryPoint(unittest.TestCase):
    def test_run_returns_exit_codes(self):
        self.assertEqual(run(['assess', '--registry', REGISTRY, '--format', 'json', '--gate', '13000']), 0)
        self.assertEqual(run(['assess', '--registry', REGISTRY, '--format', 'json', '--gate', '10000']), 2)
        self.assertEqual(run(['frobnicate']), 1)

    def test_exit_codes_must_be_distinct(self):
        with self.assertRaises(ConfigError):
            ExitPolicy(gate_breached=1)
        self.assertEqual(ExitPolicy(gate_threshold=5.0).gate_breached, 2)


if __name__ == '__main__':
    unittest.main()
