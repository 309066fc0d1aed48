"""Long-format CSV panels, JSON emission with full float precision, schemas."""

from __future__ import annotations

import csv
import gzip
import io
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DuplicateKey, InvalidInput, ParseError, UnbalancedPanel
from .panel import Panel

FLOAT_DIGITS = 17
SCHEMAS = {
    "hetpanel.report/1": "report.schema.json",
    "hetpanel.ks/1": "ks.schema.json",
    "hetpanel.study/1": "study.schema.json",
}


def format_float(x: float) -> str:
    """17 significant digits (round-trips every double)."""
    return format(float(x), f".{FLOAT_DIGITS}g")


def _dump(obj, indent: int, level: int, out: list):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," if indent else ", "
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj) if math.isfinite(obj) else "null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for j, (k, v) in enumerate(obj.items()):
            out.append((sep if j else "") + pad + json.dumps(str(k), ensure_ascii=False) + ": ")
            _dump(v, indent, level + 1, out)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            out.append("[]")
            return
        out.append("[")
        for j, v in enumerate(obj):
            out.append((sep if j else "") + pad)
            _dump(v, indent, level + 1, out)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits.

    Non-finite floats become ``null`` (JSON has no NaN).
    """
    out = []
    _dump(obj, indent, 0, out)
    return "".join(out) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def load_schema(name: str) -> dict:
    """Shipped JSON schema for a ``schema`` tag such as ``hetpanel.report/1``."""
    try:
        filename = SCHEMAS[name]
    except KeyError:
        raise InvalidInput(f"unknown schema {name!r}") from None
    text = resources.files("hetpanel").joinpath("schemas", filename).read_text("utf-8")
    return json.loads(text)


def validate(document: dict) -> None:
    """Validate ``document`` against the schema named in its ``schema`` field."""
    import jsonschema

    jsonschema.validate(document, load_schema(document.get("schema", "")))


def _open_text(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8", newline="")
    return open(path, "r", encoding="utf-8", newline="")


def _time_order(labels):
    """Numeric order when every label is an integer, else lexical."""
    try:
        keys = [int(t) for t in labels]
    except ValueError:
        return sorted(labels), list(sorted(labels))
    order = sorted(range(len(labels)), key=keys.__getitem__)
    return [labels[j] for j in order], [keys[j] for j in order]


def read_long_records(path, unit_col="unit", time_col="time", value_col="value"):
    """``{unit: {time: value}}`` from a long CSV, preserving first-seen unit order."""
    records = {}
    with _open_text(path) as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in (unit_col, time_col, value_col) if c not in header]
        if missing:
            raise ParseError(f"{path}: missing column(s) {', '.join(missing)}; header is {header}")
        # row numbers count the header as row 1
        for row_no, row in enumerate(reader, start=2):
            unit, time, raw = row[unit_col], row[time_col], row[value_col]
            if unit is None or time is None or raw is None:
                raise ParseError(f"{path}: row {row_no} has too few fields", row_no)
            try:
                value = float(raw)
            except ValueError:
                raise ParseError(f"{path}: row {row_no}: value {raw!r} is not numeric",
                                 row_no) from None
            if not math.isfinite(value):
                raise ParseError(f"{path}: row {row_no}: value {raw!r} is not finite", row_no)
            cells = records.setdefault(unit, {})
            if time in cells:
                raise DuplicateKey(f"{path}: row {row_no}: duplicate (unit, time) = "
                                   f"({unit!r}, {time!r})")
            cells[time] = value
    if not records:
        raise ParseError(f"{path}: no data rows")
    return records


def pivot_records(records: dict) -> Panel:
    """Balanced :class:`Panel` from ``{unit: {time: value}}``; time sorted."""
    all_times = set()
    for cells in records.values():
        all_times.update(cells)
    labels, keys = _time_order(list(all_times))
    short = [u for u, cells in records.items() if len(cells) != len(labels)]
    if short:
        shown = ", ".join(repr(u) for u in short[:10])
        more = f" and {len(short) - 10} more" if len(short) > 10 else ""
        raise UnbalancedPanel(f"unbalanced panel: unit(s) {shown}{more} lack some of the "
                              f"{len(labels)} periods", short)
    values = np.array([[cells[t] for t in labels] for cells in records.values()])
    return Panel(values, list(records), keys)


def read_long_csv(path, unit_col: str = "unit", time_col: str = "time",
                  value_col: str = "value") -> Panel:
    """Read a long ``unit,time,value`` CSV (optionally ``.gz``) into a balanced panel.

    Raises
    ------
    ParseError
        Missing columns or a non-numeric value (the message carries the row number).
    DuplicateKey
        A repeated ``(unit, time)`` pair.
    UnbalancedPanel
        Some unit lacks some period; the offending units are listed.
    """
    return pivot_records(read_long_records(path, unit_col, time_col, value_col))


def read_panels(paths, unit_col="unit", time_col="time", value_col="value") -> Panel:
    """Stack the units of several long CSV files sharing one time axis."""
    merged = {}
    for path in paths:
        for unit, cells in read_long_records(path, unit_col, time_col, value_col).items():
            if unit in merged:
                raise DuplicateKey(f"{path}: unit {unit!r} also appears in an earlier file")
            merged[unit] = cells
    return pivot_records(merged)


def write_long_csv(panel: Panel, path, unit_col="unit", time_col="time", value_col="value",
                   extra: dict | None = None) -> None:
    """Write ``panel`` as long CSV; ``extra`` adds constant-per-unit columns."""
    extra = extra or {}
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([unit_col, *extra, time_col, value_col])
    for i, unit in enumerate(panel.unit_ids):
        ex = [col[i] for col in extra.values()]
        for t, time in enumerate(panel.time_ids):
            writer.writerow([unit, *ex, time, repr(float(panel.values[i, t]))])
    data = buf.getvalue().encode("utf-8")
    with open(path, "wb") as raw:
        if path.suffix == ".gz":
            # fixed name and mtime keep the archive byte-identical across runs
            with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as fh:
                fh.write(data)
        else:
            raw.write(data)
