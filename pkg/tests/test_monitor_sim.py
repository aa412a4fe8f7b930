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

from registry.models import Dimension, Severity
from simulation.monitor_sim import EventStream, GeneratorSpec, Scenario, generate, load_scenario
from utils.errors import InvalidScenario, IoFailure

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'fixtures')


def flat_scenario(seed=1, rate=36.0, duration=36000.0):
    return Scenario('flat', seed, duration, (GeneratorSpec('availability', 'web', 'flood', rate),))


class TestGenerate(unittest.TestCase):
    """Seeded event generation."""

    def setUp(self):
        self.scenario = load_scenario(os.path.join(FIXTURES, 'cloud_scenario.json'))

    def test_same_seed_same_stream(self):
        self.assertEqual(generate(self.scenario), generate(self.scenario))

    def test_different_seed_different_stream(self):
        self.assertNotEqual(generate(self.scenario), generate(self.scenario.with_seed(42)))

    def test_ordered_and_inside_horizon(self):
        events = generate(self.scenario)
        self.assertTrue(events)
        timestamps = [event.timestamp for event in events]
        self.assertEqual(timestamps, sorted(timestamps))
        self.assertGreaterEqual(timestamps[0], self.scenario.start)
        self.assertLess(timestamps[-1], self.scenario.start + self.scenario.duration)

    def test_events_follow_generators(self):
        feeds = {(g.dimension, g.asset_id, g.hypothesis_id) for g in self.scenario.generators}
        for event in generate(self.scenario):
            self.assertIn((event.dimension, event.asset_id, event.hypothesis_id), feeds)

    def test_start_offsets_timestamps(self):
        shifted = Scenario('shifted', 1, 36000.0, flat_scenario().generators, start=1000.0)
        base = [event.timestamp for event in generate(flat_scenario())]
        moved = [event.timestamp for event in generate(shifted)]
        self.assertEqual(len(base), len(moved))
        for a, b in zip(base, moved):
            self.assertAlmostEqual(b - a, 1000.0)

    def test_poisson_count(self):
        # 36 events per hour over ten hours: mean 360
        counts = np.array([len(generate(flat_scenario(seed))) for seed in range(30)])
        sigma = np.sqrt(360.0)
        self.assertTrue(np.all(np.abs(counts - 360) < 5 * sigma))
        self.assertLess(abs(counts.mean() - 360), 3 * sigma / np.sqrt(len(counts)))

    def test_ramp_increases_density(self):
        events = [e for e in generate(self.scenario) if e.dimension == Dimension.AVAILABILITY]
        half = self.scenario.start + self.scenario.duration / 2
        first = sum(1 for event in events if event.timestamp < half)
        self.assertGreater(len(events) - first, first)

    def test_zero_rate_is_silent(self):
        self.assertEqual(generate(flat_scenario(rate=0.0)), [])

    def test_severity_mix(self):
        scenario = Scenario('severe', 3, 36000.0,
                            (GeneratorSpec('integrity', 'app', None, 10.0, (0.0, 0.0, 1.0)),))
        events = generate(scenario)
        self.assertTrue(events)
        self.assertTrue(all(event.severity == Severity.HIGH for event in events))

    def test_adding_generator_keeps_other_streams(self):
        fewer = Scenario('fewer', self.scenario.seed, self.scenario.duration, self.scenario.generators[:2])
        kept = [e for e in generate(self.scenario) if e.dimension != Dimension.AVAILABILITY]
        self.assertEqual(generate(fewer), kept)

    def test_rejects_non_scenario(self):
        with self.assertRaises(InvalidScenario):
            generate({'seed': 1})


class TestScenarioValidation(unittest.TestCase):
    def test_invalid_generators(self):
        for kwargs in ({'rate': -1.0}, {'rate': float('nan')}, {'rate': float('inf')},
                       {'rate': 1.0, 'rate_end': -2.0}, {'rate': 1.0, 'severity_mix': (0.5, 0.5, 0.5)},
                       {'rate': 1.0, 'severity_mix': (1.0, 0.0)}, {'rate': 1.0, 'severity_mix': (1.5, -0.5, 0.0)}):
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(InvalidScenario):
                    GeneratorSpec('availability', 'web', None, **kwargs)
        with self.assertRaises(InvalidScenario):
            GeneratorSpec('durability', 'web', None, 1.0)
        with self.assertRaises(InvalidScenario):
            GeneratorSpec('availability', '', None, 1.0)

    def test_invalid_scenarios(self):
        for seed, duration, start in ((-1, 10.0, 0.0), (2 ** 64, 10.0, 0.0), (1, 0.0, 0.0),
                                      (1, -5.0, 0.0), (1, 10.0, -1.0), (1, float('nan'), 0.0)):
            with self.subTest(seed=seed, duration=duration, start=start):
                with self.assertRaises(InvalidScenario):
                    Scenario('bad', seed, duration, start=start)

    def test_largest_seed_accepted(self):
        scenario = Scenario('edge', 2 ** 64 - 1, 3600.0, flat_scenario().generators)
        self.assertEqual(generate(scenario), generate(scenario))

    def test_from_dict_errors(self):
        with self.assertRaises(InvalidScenario):
            Scenario.from_dict({'seed': 1})
        with self.assertRaises(InvalidScenario):
            Scenario.from_dict({'seed': 1, 'duration': 10, 'generators': [{'dimension': 'integrity'}]})
        with self.assertRaises(InvalidScenario):
            Scenario.from_dict({'seed': 'many', 'duration': 10})


class TestLoadScenario(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def write(self, content):
        path = os.path.join(self.test_dir, 'scenario.json')
        with open(path, 'w', encoding='utf-8') as f:
            f.write(content)
        return path

    def test_fixture(self):
        scenario = load_scenario(os.path.join(FIXTURES, 'cloud_scenario.json'))
        self.assertEqual(scenario.name, 'three-asset-cloud')
        self.assertEqual(scenario.seed, 20230101)
        self.assertEqual(len(scenario.generators), 3)
        self.assertEqual(scenario.generators[2].rate_end, 40.0)

    def test_missing_file(self):
        with self.assertRaises(IoFailure):
            load_scenario(os.path.join(self.test_dir, 'absent.json'))

    def test_invalid_json(self):
        with self.assertRaises(InvalidScenario):
            load_scenario(self.write('{"seed": '))

    def test_not_an_object(self):
        with self.assertRaises(InvalidScenario):
            load_scenario(self.write(json.dumps([1, 2, 3])))


class TestEventStream(unittest.TestCase):
    """Bounded producer/consumer delivery."""

    def setUp(self):
        self.scenario = load_scenario(os.path.join(FIXTURES, 'cloud_scenario.json'))

    def test_stream_matches_generate(self):
        self.assertEqual(list(EventStream(self.scenario)), generate(self.scenario))

    def test_small_queue(self):
        self.assertEqual(list(EventStream(self.scenario, maxsize=1)), generate(self.scenario))

    def test_early_close_stops_producer(self):
        stream = EventStream(self.scenario, maxsize=2)
        events = iter(stream)
        first = next(events)
        self.assertEqual(first, generate(self.scenario)[0])
        events.close()
        self.assertFalse(stream._thread.is_alive())

    def test_invalid_queue_size(self):
        with self.assertRaises(InvalidScenario):
            EventStream(self.scenario, maxsize=0)


if __name__ == '__main__':
    unittest.main()
