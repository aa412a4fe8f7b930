#!/usr/bin/env python3

"""Line-oriented registry file format.

One record per line as ``KIND<TAB>json``; a ``META`` line first, a
``DIGEST<TAB><hex>`` line last. The digest is the snapshot's content digest,
so a reloaded file must reproduce it exactly.
"""

import json
import logging
from typing import Any, Dict, List

from registry.models import (
    Asset, Control, MonitorEvent, RegistrySnapshot, ThreatEvent, canonical_json,
)
from registry.store import validate_references
from utils.errors import CorruptFile, IoFailure, RegistryError
from utils.file_utils import read_lines, write_lines_atomic

logger = logging.getLogger('risk_engine.registry.persistence')

FORMAT_VERSION = 1

RECORD_PARSERS = {
    'ASSET': ('assets', Asset.from_dict),
    'THREAT': ('threat_events', ThreatEvent.from_dict),
    'CONTROL': ('controls', Control.from_dict),
    'EVENT': ('monitor_events', MonitorEvent.from_dict),
}


def serialize(snapshot: RegistrySnapshot) -> List[str]:
    """Render a snapshot as registry file lines."""
    lines = [f"META\t{canonical_json({'format': FORMAT_VERSION, 'version': snapshot.version})}"]
    for kind, data in snapshot.records():
        lines.append(f"{kind}\t{canonical_json(data)}")
    lines.append(f"DIGEST\t{snapshot.content_digest}")
    return lines


def persist(snapshot: RegistrySnapshot, path: str) -> None:
    """Write a snapshot to ``path`` atomically.

    Raises:
        IoFailure: the file cannot be written
    """
    try:
        write_lines_atomic(path, serialize(snapshot))
    except OSError as e:
        logger.error(f"Error writing registry to {path}: {str(e)}")
        raise IoFailure(f"cannot write registry file {path}: {e}") from e
    logger.info(f"Saved registry version {snapshot.version} to {path}")


def parse(lines: List[str], source: str = '<memory>') -> RegistrySnapshot:
    """Parse registry file lines back into a snapshot.

    Raises:
        CorruptFile: malformed line, unknown kind, missing or mismatched digest
    """
    while lines and not lines[-1].strip():
        lines = lines[:-1]
    if not lines:
        raise CorruptFile(f"{source}: empty registry file")

    kind, _, value = lines[-1].partition('\t')
    if kind != 'DIGEST' or not value:
        raise CorruptFile(f"{source}: missing trailing digest line")
    stored_digest = value.strip()

    fields: Dict[str, List[Any]] = {name: [] for name, _ in RECORD_PARSERS.values()}
    version = 0
    for number, line in enumerate(lines[:-1], start=1):
        kind, separator, value = line.partition('\t')
        if not separator:
            raise CorruptFile(f"{source}:{number}: record has no tab separator")
        try:
            data = json.loads(value)
        except json.JSONDecodeError as e:
            raise CorruptFile(f"{source}:{number}: malformed record: {e}") from e
        if not isinstance(data, dict):
            raise CorruptFile(f"{source}:{number}: record must be an object")

        if kind == 'META':
            if number != 1:
                raise CorruptFile(f"{source}:{number}: META must be the first line")
            if data.get('format') != FORMAT_VERSION:
                raise CorruptFile(f"{source}: unsupported format {data.get('format')!r}")
            version = data.get('version', 0)
            if not isinstance(version, int) or version < 0:
                raise CorruptFile(f"{source}: bad version {version!r}")
            continue

        if kind not in RECORD_PARSERS:
            raise CorruptFile(f"{source}:{number}: unknown record kind {kind!r}")
        field_name, parser = RECORD_PARSERS[kind]
        try:
            fields[field_name].append(parser(data))
        except (RegistryError, ValueError, TypeError) as e:
            raise CorruptFile(f"{source}:{number}: invalid {kind} record: {e}") from e

    snapshot = RegistrySnapshot(version=version, **fields)
    if snapshot.content_digest != stored_digest:
        raise CorruptFile(f"{source}: digest mismatch (stored {stored_digest[:12]}, "
                          f"computed {snapshot.content_digest[:12]})")
    try:
        validate_references(snapshot)
    except RegistryError as e:
        raise CorruptFile(f"{source}: {e}") from e
    return snapshot


def load(path: str) -> RegistrySnapshot:
    """Load a registry file.

    Raises:
        IoFailure: the file cannot be read
        CorruptFile: the content fails validation
    """
    try:
        lines = read_lines(path)
    except (OSError, UnicodeDecodeError) as e:
        logger.error(f"Error reading registry from {path}: {str(e)}")
        raise IoFailure(f"cannot read registry file {path}: {e}") from e

    snapshot = parse(lines, source=path)
    logger.info(f"Loaded registry version {snapshot.version} from {path}")
    return snapshot


def write_events(events, path: str) -> None:
    """Write monitor events as ``EVENT<TAB>json`` lines, the registry record format.

    Raises:
        IoFailure: the file cannot be written
    """
    try:
        write_lines_atomic(path, (f"EVENT\t{canonical_json(event.to_dict())}" for event in events))
    except OSError as e:
        logger.error(f"Error writing events to {path}: {str(e)}")
        raise IoFailure(f"cannot write events file {path}: {e}") from e


def read_events(path: str) -> List[MonitorEvent]:
    """Read an events file written by ``write_events``.

    Raises:
        IoFailure: the file cannot be read
        CorruptFile: a line is not a valid EVENT record
    """
    try:
        lines = read_lines(path)
    except (OSError, UnicodeDecodeError) as e:
        logger.error(f"Error reading events from {path}: {str(e)}")
        raise IoFailure(f"cannot read events file {path}: {e}") from e

    events = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        kind, _, value = line.partition('\t')
        if kind != 'EVENT':
            raise CorruptFile(f"{path}:{number}: expected an EVENT record, got {kind!r}")
        try:
            events.append(MonitorEvent.from_dict(json.loads(value)))
        except (json.JSONDecodeError, RegistryError, ValueError, TypeError) as e:
            raise CorruptFile(f"{path}:{number}: invalid event: {e}") from e
    return events
