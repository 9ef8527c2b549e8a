import json
import logging
import os
from dataclasses import dataclass, field
from typing import Optional

from utils.errors import SetFileError

logger = logging.getLogger(__name__)

HEADER_PREFIX = "#"


@dataclass
class SetFile:
    """
    Contents of a set file.

    Args:
        values (list): the integers, in file order
        header (dict): the parsed header line, or None when the file has none
    """

    values: list
    header: Optional[dict] = field(default=None)


def write_set(path, values, method, params):
    """
    Write a set file: one JSON header line, then one integer per line, ascending.

    Args:
        path (str): output file
        values (iterable): non-negative integers
        method (str): construction name recorded in the header
        params (dict): construction parameters recorded in the header

    Returns:
        str: the path written
    """
    values = sorted(values)
    header = {"method": method, "params": params, "count": len(values)}
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{HEADER_PREFIX} {json.dumps(header, sort_keys=True)}\n")
        for v in values:
            f.write(f"{v}\n")
    logger.debug("Wrote %d values to %s", len(values), path)
    return path


def read_set(path):
    """
    Read a set file; the header line is optional, blank lines are ignored.

    Args:
        path (str): input file

    Returns:
        SetFile: values in file order plus the header

    Raises:
        SetFileError: unreadable file, bad header, or a line that is not a non-negative integer
    """
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise SetFileError(f"Cannot read {path}: {e}")

    header = None
    values = []
    for number, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        if text.startswith(HEADER_PREFIX):
            if number != 1:
                raise SetFileError(f"{path}:{number}: header allowed on the first line only")
            try:
                header = json.loads(text[len(HEADER_PREFIX):])
            except json.JSONDecodeError as e:
                raise SetFileError(f"{path}:1: malformed header: {e}")
            if not isinstance(header, dict):
                raise SetFileError(f"{path}:1: header must be a JSON object")
            continue
        # str.isdigit also accepts superscripts and other Unicode digits
        if not (text.isascii() and text.isdigit()):
            raise SetFileError(f"{path}:{number}: not a non-negative integer: {text!r}")
        values.append(int(text))

    if header is not None and header.get("count") not in (None, len(values)):
        logger.warning("%s: header says %s values, found %d", path, header["count"], len(values))
    return SetFile(values=values, header=header)
