#!/usr/bin/env python3

import json
import logging
from abc import ABC, abstractmethod
from typing import Callable, List, Optional

import click

from assessment.formatting import Report, format_report
from utils.file_utils import append_line


class BaseSink(ABC):
    """Base class for report destinations.

    Subclasses decide where a report goes; the base keeps count and logs.
    """

    def __init__(self, name: Optional[str] = None):
        self.logger = logging.getLogger(f'risk_engine.{name or self.__class__.__name__}')
        self.emitted = 0

    @abstractmethod
    def write(self, report: Report) -> None:
        """Deliver one report."""
        pass

    def emit(self, report: Report) -> None:
        self.write(report)
        self.emitted += 1
        self.logger.debug(f"Emitted report for registry version {report.snapshot_version}")

    def emit_failure(self, message: str) -> None:
        self.logger.error(f"Source failure: {message}")

    def close(self) -> None:
        pass


class FileSink(BaseSink):
    """Appends one JSON report per line to a file."""

    def __init__(self, path: str):
        super().__init__('sink.file')
        self.path = path

    def write(self, report: Report) -> None:
        append_line(self.path, json.dumps(report.to_dict(), sort_keys=True, separators=(',', ':')))

    def emit_failure(self, message: str) -> None:
        super().emit_failure(message)
        append_line(self.path, json.dumps({'kind': 'failure', 'message': message}, sort_keys=True))


class StdoutSink(BaseSink):
    """Prints reports in a chosen output format."""

    def __init__(self, fmt: str = 'table', color: bool = False, gate: Optional[float] = None,
                 echo: Callable[..., None] = click.echo):
        super().__init__('sink.stdout')
        self.fmt = fmt
        self.color = color
        self.gate = gate
        self.echo = echo

    def write(self, report: Report) -> None:
        if self.fmt == 'json':
            # One report per line keeps the stream parseable
            self.echo(json.dumps(report.to_dict(), sort_keys=True, separators=(',', ':')))
        else:
            self.echo(format_report(report, self.fmt, color=self.color, gate=self.gate))
            self.echo('')

    def emit_failure(self, message: str) -> None:
        super().emit_failure(message)
        self.echo(f"source failure: {message}", err=True)


class MultiSink(BaseSink):
    """Fans a report out to several sinks."""

    def __init__(self, sinks: List[BaseSink]):
        super().__init__('sink.multi')
        self.sinks = sinks

    def write(self, report: Report) -> None:
        for sink in self.sinks:
            sink.emit(report)

    def emit_failure(self, message: str) -> None:
        for sink in self.sinks:
            sink.emit_failure(message)

    def close(self) -> None:
        for sink in self.sinks:
            sink.close()
