#!/usr/bin/env python3

"""Command-line entry point of the CIA risk engine."""

import json
import logging
import os
import signal
import sys
import threading
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import click
from dotenv import load_dotenv

# Add the package root to the path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

# Import local modules
from assessment.engine import AssessmentConfig, evaluate, report_from_dict
from assessment.formatting import FORMATS, Report, format_report, snapshot_table
from assessment.sinks import BaseSink, FileSink, MultiSink, StdoutSink
from assessment.watcher import NullSource, RegistryFile, ReplaySource, RiskWatcher, SimulatedClock, SourceFailure
from decision.ahp import rank_alternatives, weights_of
from decision.judgments import consistency_report, format_ranking, load_judgments
from registry.models import RegistrySnapshot, canonical_json
from registry.persistence import load, persist, read_events, write_events
from registry.store import KINDS, Mutation, Registry, record_from_dict
from simulation.monitor_sim import EventStream, load_scenario
from utils.config import ConfigLoader
from utils.errors import ConfigError, IoFailure, RiskEngineError
from utils.file_utils import read_lines
from utils.logger import setup_logger

logger = logging.getLogger('risk_engine.cli')


@dataclass(frozen=True)
class ExitPolicy:
    """Process exit codes for each command outcome."""

    gate_threshold: Optional[float] = None
    ok: int = 0
    input_error: int = 1
    gate_breached: int = 2
    internal_failure: int = 3

    def __post_init__(self):
        codes = (self.ok, self.input_error, self.gate_breached, self.internal_failure)
        if len(set(codes)) != len(codes):
            raise ConfigError(f"exit codes must be distinct, got {codes}")

    def for_report(self, report: Report) -> int:
        if report.exceeds(self.gate_threshold):
            return self.gate_breached
        return self.ok


EXIT_POLICY = ExitPolicy()


def _use_color() -> bool:
    return not os.getenv('NO_COLOR') and click.get_text_stream('stdout').isatty()


def _load_config(config_path: Optional[str]) -> Dict[str, Any]:
    # An explicit --config must be readable; without one the built-in defaults apply
    return ConfigLoader(config_path, strict=config_path is not None).load_config()


def _assessment_config(config: Dict[str, Any], interval: Optional[float] = None) -> AssessmentConfig:
    if interval is not None:
        config['general']['poll_interval'] = interval
    return AssessmentConfig.from_dict(config)


def _load_or_empty(path: str) -> RegistrySnapshot:
    if os.path.exists(path):
        return load(path)
    logger.info(f"Registry file {path} does not exist; starting an empty registry")
    return RegistrySnapshot()


def _sinks(fmt: str, out: Optional[str], gate: Optional[float], config: Dict[str, Any]) -> BaseSink:
    sinks: List[BaseSink] = [StdoutSink(fmt, color=_use_color(), gate=gate)]
    sink_path = out or config.get('report', {}).get('sink_path')
    if sink_path:
        sinks.append(FileSink(sink_path))
    return sinks[0] if len(sinks) == 1 else MultiSink(sinks)


def _gate(option: Optional[float], settings: AssessmentConfig) -> Optional[float]:
    return option if option is not None else settings.gate_threshold


class RiskEngineCLI(click.Group):
    """Click group that maps every outcome onto the exit policy."""

    def main(self, args: Optional[Sequence[str]] = None, prog_name: Optional[str] = None,
             standalone_mode: bool = True, **extra: Any) -> Any:
        try:
            result = super().main(args=args, prog_name=prog_name, standalone_mode=False, **extra)
            code = result if isinstance(result, int) else EXIT_POLICY.ok
        except click.ClickException as e:
            e.show()
            code = EXIT_POLICY.input_error
        except click.Abort:
            click.echo('Aborted!', err=True)
            code = EXIT_POLICY.input_error
        except RiskEngineError as e:
            logger.error(f"{e.__class__.__name__}: {str(e)}")
            click.echo(f"Error: {e}", err=True)
            code = EXIT_POLICY.input_error
        except Exception as e:
            logger.exception(f"Internal failure: {str(e)}")
            click.echo(f"Internal error: {e}", err=True)
            code = EXIT_POLICY.internal_failure

        if standalone_mode:
            sys.exit(code)
        return code


format_option = click.option('--format', 'fmt', type=click.Choice(FORMATS), default='table', show_default=True,
                             help='Output format')
config_option = click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
                             help='Configuration file (JSON); built-in defaults when omitted')
registry_option = click.option('--registry', 'registry_path', type=click.Path(dir_okay=False), required=True,
                               help='Registry file')


@click.group(cls=RiskEngineCLI)
@click.option('--verbose', is_flag=True, default=False, help='Enable verbose logging')
@click.option('--log-file', type=click.Path(dir_okay=False), default=None, help='Also write logs to this file')
def cli(verbose: bool, log_file: Optional[str]):
    """CIA risk engine: registry, assessment, watch loop, AHP ranking and simulation."""
    load_dotenv()
    setup_logger('risk_engine', log_level=logging.DEBUG if verbose else logging.WARNING, log_file=log_file)


# Registry management

@cli.group()
def registry():
    """Manage the asset, threat, hypothesis, control and event registry."""
    pass


@registry.command('add')
@click.argument('kind', type=click.Choice(KINDS))
@registry_option
@click.option('--data', required=True, help='Record as a JSON object')
@click.option('--parent', default=None, help='Owning threat event (hypothesis records)')
@click.option('--replace', is_flag=True, default=False, help='Update the record with the same id')
def registry_add(kind: str, registry_path: str, data: str, parent: Optional[str], replace: bool) -> int:
    """Add a record of KIND to the registry file, creating the file if needed."""
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as e:
        raise click.BadParameter(f"not valid JSON: {e}", param_hint='--data')

    handle = Registry(_load_or_empty(registry_path))
    if kind == 'event' and isinstance(payload, list):
        record = tuple(record_from_dict(kind, item) for item in payload)
    else:
        record = record_from_dict(kind, payload)
    snapshot = handle.apply(Mutation('update' if replace else 'add', kind, record, parent_id=parent))
    persist(snapshot, registry_path)
    click.echo(f"Registry {registry_path} now at version {snapshot.version}")
    return EXIT_POLICY.ok


@registry.command('rm')
@click.argument('kind', type=click.Choice(KINDS))
@click.argument('record_id')
@registry_option
@click.option('--parent', default=None, help='Owning threat event (hypothesis records)')
def registry_rm(kind: str, record_id: str, registry_path: str, parent: Optional[str]) -> int:
    """Remove a record by id; for events, RECORD_ID is the cutoff timestamp of retention."""
    handle = Registry(load(registry_path))
    snapshot = handle.apply(Mutation('remove', kind, record_id, parent_id=parent))
    persist(snapshot, registry_path)
    click.echo(f"Registry {registry_path} now at version {snapshot.version}")
    return EXIT_POLICY.ok


@registry.command('show')
@registry_option
@click.option('--format', 'fmt', type=click.Choice(('table', 'json')), default='table', show_default=True)
def registry_show(registry_path: str, fmt: str) -> int:
    """Print the registry content."""
    snapshot = load(registry_path)
    if fmt == 'json':
        click.echo(json.dumps({
            'version': snapshot.version,
            'digest': snapshot.content_digest,
            'records': [{'type': kind.lower(), 'data': data} for kind, data in snapshot.records()],
        }, indent=2, sort_keys=True))
    else:
        click.echo(snapshot_table(snapshot))
    return EXIT_POLICY.ok


# Assessment

@cli.command()
@registry_option
@config_option
@format_option
@click.option('--gate', type=float, default=None, help='Maximum acceptable total risk R')
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='Append the report to this JSON-lines file')
def assess(registry_path: str, config_path: Optional[str], fmt: str, gate: Optional[float],
           out: Optional[str]) -> int:
    """Assess the registry once and print the risk report."""
    config = _load_config(config_path)
    settings = _assessment_config(config)
    policy = ExitPolicy(gate_threshold=_gate(gate, settings))

    report = evaluate(load(registry_path), settings)
    sink = _sinks(fmt, out, policy.gate_threshold, config)
    sink.emit(report)
    sink.close()

    code = policy.for_report(report)
    if code == policy.gate_breached:
        logger.warning(f"Total risk {report.total:.1f} exceeds the gate of {policy.gate_threshold:.1f}")
    return code


@cli.command()
@registry_option
@config_option
@format_option
@click.option('--interval', type=float, default=None, help='Seconds between assessments')
@click.option('--scenario', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Replay a simulated scenario on a simulated clock')
@click.option('--events', 'events_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Replay an events file on a simulated clock')
@click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=None, help='Override the scenario seed')
@click.option('--max-ticks', type=click.IntRange(1), default=None, help='Stop after this many assessments')
@click.option('--gate', type=float, default=None, help='Maximum acceptable total risk R for the last report')
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='Append reports to this JSON-lines file')
def watch(registry_path: str, config_path: Optional[str], fmt: str, interval: Optional[float],
          scenario: Optional[str], events_path: Optional[str], seed: Optional[int], max_ticks: Optional[int],
          gate: Optional[float], out: Optional[str]) -> int:
    """Re-assess the registry every poll interval until interrupted."""
    if scenario and events_path:
        raise click.UsageError('--scenario and --events are mutually exclusive')

    config = _load_config(config_path)
    settings = _assessment_config(config, interval)
    policy = ExitPolicy(gate_threshold=_gate(gate, settings))

    clock = None
    source = NullSource()
    if scenario:
        loaded = load_scenario(scenario)
        if seed is not None:
            loaded = loaded.with_seed(seed)
        source = ReplaySource(list(EventStream(loaded)))
        clock = SimulatedClock(loaded.start)
    elif events_path:
        events = read_events(events_path)
        source = ReplaySource(events)
        clock = SimulatedClock(events[0].timestamp if events else 0.0)

    handle = Registry(_load_or_empty(registry_path))
    watcher = RiskWatcher(handle, source, settings, clock=clock, registry_file=RegistryFile(registry_path))
    sink = _sinks(fmt, out, policy.gate_threshold, config)

    previous_handlers = {}
    if threading.current_thread() is threading.main_thread():
        for signum in (signal.SIGINT, signal.SIGTERM):
            previous_handlers[signum] = signal.signal(signum, lambda *_: watcher.stop())

    last: Optional[Report] = None
    try:
        for item in watcher.watch(max_ticks=max_ticks):
            if isinstance(item, SourceFailure):
                sink.emit_failure(item.message)
                continue
            sink.emit(item)
            last = item
    finally:
        sink.close()
        for signum, handler in previous_handlers.items():
            signal.signal(signum, handler)

    return policy.for_report(last) if last is not None else policy.ok


# Decision making

@cli.group()
def ahp():
    """Rank alternatives with the analytic hierarchy process."""
    pass


def _load_model(path: str, config_path: Optional[str], strict: bool):
    settings = _load_config(config_path).get('ahp', {})
    model = load_judgments(path, strict=strict or bool(settings.get('strict_scale', False)))
    consistency_report(model, float(settings.get('consistency_threshold', 0.1)))
    return model


@ahp.command('rank')
@click.argument('judgments', type=click.Path(exists=True, dir_okay=False))
@config_option
@click.option('--format', 'fmt', type=click.Choice(FORMATS), default='table', show_default=True)
@click.option('--strict', is_flag=True, default=False, help='Reject judgments off the 1-9 scale')
def ahp_rank(judgments: str, config_path: Optional[str], fmt: str, strict: bool) -> int:
    """Weights of the alternatives according to the objective."""
    model = _load_model(judgments, config_path, strict)
    click.echo(format_ranking(rank_alternatives(model), fmt, name='Alternative'))
    return EXIT_POLICY.ok


@ahp.command('weights')
@click.argument('judgments', type=click.Path(exists=True, dir_okay=False))
@config_option
@click.option('--format', 'fmt', type=click.Choice(FORMATS), default='table', show_default=True)
@click.option('--strict', is_flag=True, default=False, help='Reject judgments off the 1-9 scale')
def ahp_weights(judgments: str, config_path: Optional[str], fmt: str, strict: bool) -> int:
    """Priority vector of the criteria."""
    model = _load_model(judgments, config_path, strict)
    click.echo(format_ranking(weights_of(model.criteria), fmt, name='Criterion'))
    return EXIT_POLICY.ok


# Simulation and reports

@cli.command()
@click.argument('scenario', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='Events file; standard output when omitted')
@click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=None, help='Override the scenario seed')
def simulate(scenario: str, out: Optional[str], seed: Optional[int]) -> int:
    """Generate the monitor events of a scenario."""
    loaded = load_scenario(scenario)
    if seed is not None:
        loaded = loaded.with_seed(seed)
    events = list(EventStream(loaded))
    if out:
        write_events(events, out)
        click.echo(f"Wrote {len(events)} events to {out}", err=True)
    else:
        for event in events:
            click.echo(f"EVENT\t{canonical_json(event.to_dict())}")
    return EXIT_POLICY.ok


@cli.command()
@click.argument('report_file', type=click.Path(exists=True, dir_okay=False))
@format_option
def report(report_file: str, fmt: str) -> int:
    """Render the last report of a JSON-lines report file."""
    try:
        lines = read_lines(report_file)
    except (OSError, UnicodeDecodeError) as e:
        raise IoFailure(f"cannot read report file {report_file}: {e}") from e

    for line in reversed(lines):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            raise RiskEngineError(f"{report_file} holds a line that is not JSON: {e}") from e
        if isinstance(data, dict) and data.get('kind') in ('risk', 'residual'):
            try:
                loaded = report_from_dict(data)
            except (KeyError, TypeError, ValueError) as e:
                raise RiskEngineError(f"{report_file} holds an invalid report: {e}") from e
            click.echo(format_report(loaded, fmt, color=_use_color()))
            return EXIT_POLICY.ok
    raise RiskEngineError(f"{report_file} holds no report")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI with the given arguments and return the exit code."""
    return cli.main(args=list(argv) if argv is not None else None, prog_name='cia-risk', standalone_mode=False)


def main():
    """Main entry point for the application."""
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()
