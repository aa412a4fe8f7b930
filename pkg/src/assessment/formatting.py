#!/usr/bin/env python3

import csv
import io
import json
from typing import Optional, Union

import click
from prettytable import PrettyTable

from assessment.engine import ResidualReport
from assessment.fair import RiskReport
from registry.models import RegistrySnapshot

FORMATS = ('json', 'table', 'csv')

# Display precision; reports keep full precision internally
PROBABILITY_DIGITS = 2
MONEY_DIGITS = 1

LEVEL_COLORS = {
    'low': 'green',
    'medium': 'yellow',
    'high': 'red',
    'critical': 'magenta',
}

Report = Union[RiskReport, ResidualReport]


def _money(value: float) -> str:
    return f"{value:.{MONEY_DIGITS}f}"


def _probability(value: float) -> str:
    return f"{value:.{PROBABILITY_DIGITS}f}"


def _level(label: Optional[str], color: bool) -> str:
    if label is None:
        return '-'
    return click.style(label, fg=LEVEL_COLORS.get(label), bold=label == 'critical') if color else label


def risk_table(report: RiskReport) -> PrettyTable:
    """Probability and risk per CIA dimension, one column per dimension."""
    table = PrettyTable(['Value'] + [entry.dimension.value.capitalize() for entry in report.dimensions])
    table.add_row(['Probability'] + [_probability(entry.probability) for entry in report.dimensions])
    table.add_row(['Risk assessment'] + [_money(entry.risk) for entry in report.dimensions])
    table.align['Value'] = 'l'
    return table


def _summary(report: RiskReport, color: bool) -> str:
    levels = ', '.join(f"{entry.dimension.value} {_level(entry.level.label if entry.level else None, color)}"
                       for entry in report.dimensions)
    return (f"Total risk R = {_money(report.total)} {report.unit_label} "
            f"(registry version {report.snapshot_version})\n"
            f"Levels: {levels}")


def format_table(report: Report, color: bool = False, gate: Optional[float] = None) -> str:
    """Render a report as text tables with a summary and optional gate verdict."""
    if isinstance(report, ResidualReport):
        parts = [
            'Before controls',
            risk_table(report.before).get_string(),
            _summary(report.before, color),
            '',
            f"After controls ({', '.join(report.applied_controls)})",
            risk_table(report.after).get_string(),
            _summary(report.after, color),
        ]
    else:
        parts = [risk_table(report).get_string(), _summary(report, color)]

    if gate is not None:
        verdict = 'BREACHED' if report.exceeds(gate) else 'passed'
        if color:
            verdict = click.style(verdict, fg='red' if report.exceeds(gate) else 'green', bold=True)
        parts.append(f"Risk gate {_money(gate)}: {verdict}")
    return '\n'.join(parts)


def format_json(report: Report, indent: Optional[int] = 2) -> str:
    return json.dumps(report.to_dict(), indent=indent, sort_keys=True)


def format_csv(report: Report) -> str:
    """CSV with columns dimension, probability, loss, risk.

    A residual report is rendered through its after-controls view.
    """
    view = report.after if isinstance(report, ResidualReport) else report
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['dimension', 'probability', 'loss', 'risk'])
    for entry in view.dimensions:
        writer.writerow([entry.dimension.value, repr(entry.probability), repr(entry.loss), repr(entry.risk)])
    return buffer.getvalue().rstrip('\n')


def format_report(report: Report, fmt: str = 'table', color: bool = False, gate: Optional[float] = None) -> str:
    """Render a report in one of the supported output formats."""
    if fmt == 'json':
        return format_json(report)
    if fmt == 'csv':
        return format_csv(report)
    if fmt == 'table':
        return format_table(report, color=color, gate=gate)
    raise ValueError(f"unknown format {fmt!r}")


def snapshot_table(snapshot: RegistrySnapshot) -> str:
    """List the records of a registry snapshot, monitor events summarized in one row."""
    table = PrettyTable(['Kind', 'Id', 'Details'])
    for asset in snapshot.assets:
        table.add_row(['asset', asset.id, f"{asset.kind.value}: {asset.name}"])
    for threat in snapshot.threat_events:
        table.add_row(['threat', threat.id,
                       f"{threat.dimension.value} of {threat.asset_id}, loss {threat.base_loss}"])
        for hypothesis in threat.hypotheses:
            table.add_row(['hypothesis', f"{threat.id}/{hypothesis.id}",
                           f"P(H)={hypothesis.occurrence:g} P(A|H)={hypothesis.conditional_breach:g} "
                           f"({hypothesis.source.value})"])
    for control in snapshot.controls:
        target = control.threat_id + (f"/{control.hypothesis_id}" if control.hypothesis_id else '')
        state = 'applied' if control.applied else 'planned'
        table.add_row(['control', control.id, f"x{control.effect:g} on {target} ({state})"])
    if snapshot.monitor_events:
        first, last = snapshot.monitor_events[0].timestamp, snapshot.monitor_events[-1].timestamp
        table.add_row(['event', str(len(snapshot.monitor_events)), f"from {first:g} to {last:g}"])
    table.align = 'l'
    return f"Registry version {snapshot.version} ({snapshot.content_digest[:12]})\n{table.get_string()}"
