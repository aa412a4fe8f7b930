#!/usr/bin/env python3

import os
import tempfile
import logging
from typing import Iterable, List

logger = logging.getLogger('risk_engine.utils')


def read_lines(file_path: str) -> List[str]:
    """Read a UTF-8 text file into a list of lines without line terminators.

    Lines end only at LF; separators such as U+2028 or U+0085 stay inside
    their line, where JSON records carry them unescaped.

    Args:
        file_path (str): Path to the file

    Returns:
        List[str]: Lines of the file
    """
    with open(file_path, 'r', encoding='utf-8') as f:
        lines = f.read().split('\n')
    if lines and lines[-1] == '':
        lines.pop()
    return lines


def write_lines_atomic(file_path: str, lines: Iterable[str]) -> None:
    """Write lines to a file through a temporary file and an atomic rename.

    Readers never observe a half-written file.

    Args:
        file_path (str): Destination path
        lines (Iterable[str]): Lines to write, without terminators
    """
    directory = os.path.dirname(os.path.abspath(file_path))
    os.makedirs(directory, exist_ok=True)

    fd, temp_path = tempfile.mkstemp(prefix='.risk_', dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as f:
            for line in lines:
                f.write(line)
                f.write('\n')
        os.replace(temp_path, file_path)
        logger.debug(f"Wrote {file_path}")
    except Exception:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise


def append_line(file_path: str, line: str) -> None:
    """Append one line to a text file, creating parent directories as needed."""
    directory = os.path.dirname(os.path.abspath(file_path))
    os.makedirs(directory, exist_ok=True)
    with open(file_path, 'a', encoding='utf-8', newline='\n') as f:
        f.write(line)
        f.write('\n')
