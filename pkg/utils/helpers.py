import csv
import io
import json
import math
import os

import click
import numpy as np

from config import Config
from utils.errors import ArgumentError


def format_float(value, digits=None):
    """Fixed-width significant-digit formatting; non-finite becomes None."""
    digits = digits or Config.FLOAT_DIGITS
    value = float(value)
    if not math.isfinite(value):
        return None
    return f"{value:.{digits}g}"


def to_plain(obj):
    """Convert numpy containers/scalars into JSON-ready python objects."""
    if hasattr(obj, 'model_dump'):
        return to_plain(obj.model_dump())
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def dumps_json(obj, indent=2, digits=None):
    """
    Deterministic JSON writer.
    Floats are emitted with a fixed number of significant digits so that
    identical runs produce byte-identical files.
    """
    return _encode(to_plain(obj), 0, indent, digits) + '\n'


def _encode(obj, level, indent, digits):
    pad = ' ' * (indent * (level + 1))
    end_pad = ' ' * (indent * level)
    if obj is None:
        return 'null'
    if isinstance(obj, bool):
        return 'true' if obj else 'false'
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        text = format_float(obj, digits)
        return 'null' if text is None else text
    if isinstance(obj, str):
        return _quote(obj)
    if isinstance(obj, dict):
        if not obj:
            return '{}'
        items = [f"{pad}{_quote(k)}: {_encode(v, level + 1, indent, digits)}" for k, v in obj.items()]
        return '{\n' + ',\n'.join(items) + '\n' + end_pad + '}'
    if isinstance(obj, list):
        if not obj:
            return '[]'
        if all(not isinstance(v, (dict, list)) for v in obj):
            return '[' + ', '.join(_encode(v, level + 1, indent, digits) for v in obj) + ']'
        items = [pad + _encode(v, level + 1, indent, digits) for v in obj]
        return '[\n' + ',\n'.join(items) + '\n' + end_pad + ']'
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _quote(text):
    return json.dumps(text, ensure_ascii=False)


def write_text(path, text):
    """Write to `path`, or to stdout when path is None or '-'."""
    if path in (None, '-'):
        click.echo(text, nl=False)
        return
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        fh.write(text)


def write_csv(path, header, rows, digits=None):
    """Rows are sequences; floats are formatted like the JSON writer."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([
            format_float(v, digits) if isinstance(v, (float, np.floating)) else v
            for v in row
        ])
    write_text(path, buffer.getvalue())


def parse_bracket(text):
    """Parse 'lo:hi' into a pair of floats with lo < hi."""
    try:
        lo, hi = (float(part) for part in str(text).split(':'))
    except ValueError:
        raise ArgumentError(f"bracket must look like lo:hi, got '{text}'")
    if not lo < hi:
        raise ArgumentError(f"bracket needs lo < hi, got {lo}:{hi}")
    return lo, hi
