"""Operator files and analysis reports.

Operator files are UTF-8 JSON with 1-based indices and only the upper
triangle (i <= j) stored; absent coefficients are zero. Values are written
as decimal with 17 significant digits so a save/load cycle reproduces the
float bits, and the writer emits keys in a fixed order so identical inputs
give byte-identical files.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .operators import HeredityTensor, validate

FORMAT_VERSION = "1"


class ParseError(ValueError):
    """The file is not a well-formed operator document."""


class ValidationError(ValueError):
    """The parsed tensor fails the stochasticity checks."""

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(str(i) for i in self.issues)
        super().__init__(f"operator fails validation: {lines}")


def _format_number(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if not math.isfinite(f):
        raise ValueError(f"cannot serialize non-finite value {f}")
    return format(f, ".17g")


def _render(obj, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (bool, np.bool_, int, np.integer, float, np.floating)):
        return _format_number(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [inner + _render(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            inner + json.dumps(str(k), ensure_ascii=False) + ": " + _render(v, indent + 1)
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def render_json(obj) -> str:
    return _render(obj, 0) + "\n"


@dataclass(frozen=True)
class OperatorDocument:
    m: int
    entries: tuple  # ((i, j, k, value), ...) 1-based, i <= j
    metadata: dict = field(default_factory=dict)
    format_version: str = FORMAT_VERSION

    @classmethod
    def from_tensor(cls, t: HeredityTensor, metadata=None) -> "OperatorDocument":
        entries = []
        for i in range(t.m):
            for j in range(i, t.m):
                for k in range(t.m):
                    v = float(t.p[i, j, k])
                    if v != 0.0:
                        entries.append((i + 1, j + 1, k + 1, v))
        return cls(m=t.m, entries=tuple(entries), metadata=dict(metadata or {}))

    def tensor(self) -> HeredityTensor:
        arr = np.zeros((self.m, self.m, self.m))
        for i, j, k, v in self.entries:
            arr[i - 1, j - 1, k - 1] = v
            arr[j - 1, i - 1, k - 1] = v
        return HeredityTensor(arr)

    def as_payload(self) -> dict:
        return {
            "format_version": self.format_version,
            "m": self.m,
            "metadata": dict(self.metadata),
            "entries": [
                {"i": i, "j": j, "k": k, "value": v}
                for i, j, k, v in self.entries
            ],
        }


def _parse_document(payload) -> OperatorDocument:
    if not isinstance(payload, dict):
        raise ParseError("document root must be an object")
    for key in ("format_version", "m", "entries"):
        if key not in payload:
            raise ParseError(f"missing key {key!r}")
    m = payload["m"]
    if not isinstance(m, int) or m < 1:
        raise ParseError(f"bad dimension {m!r}")
    metadata = payload.get("metadata", {})
    if not isinstance(metadata, dict):
        raise ParseError("metadata must be an object")
    entries = []
    seen = set()
    raw = payload["entries"]
    if not isinstance(raw, list):
        raise ParseError("entries must be a list")
    for pos, entry in enumerate(raw):
        if not isinstance(entry, dict) or set(entry) != {"i", "j", "k", "value"}:
            raise ParseError(f"entry {pos} must have exactly the keys i, j, k, value")
        i, j, k, v = entry["i"], entry["j"], entry["k"], entry["value"]
        if not all(isinstance(n, int) for n in (i, j, k)):
            raise ParseError(f"entry {pos}: indices must be integers")
        if not (1 <= i <= m and 1 <= j <= m and 1 <= k <= m):
            raise ParseError(f"entry {pos}: index out of range for m={m}")
        if i > j:
            raise ParseError(f"entry {pos}: want i <= j, got ({i}, {j})")
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ParseError(f"entry {pos}: value must be a number")
        if (i, j, k) in seen:
            raise ParseError(f"duplicate entry for (i, j, k) = ({i}, {j}, {k})")
        seen.add((i, j, k))
        entries.append((i, j, k, float(v)))
    return OperatorDocument(
        m=m,
        entries=tuple(entries),
        metadata={str(a): b for a, b in metadata.items()},
        format_version=str(payload["format_version"]),
    )


def load_document(path) -> OperatorDocument:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"not valid JSON: {e}") from e
    return _parse_document(payload)


def load_operator(path) -> HeredityTensor:
    """Parse and validate; a tensor outside the stochastic family is refused."""
    t = load_document(path).tensor()
    issues = validate(t)
    if issues:
        raise ValidationError(issues)
    return t


def save_operator(t: HeredityTensor, path, metadata=None) -> None:
    doc = OperatorDocument.from_tensor(t, metadata)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_json(doc.as_payload()))


@dataclass(frozen=True)
class ReportDocument:
    command: str
    inputs: dict
    results: dict

    def as_payload(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
        }


def _series_rows(series) -> tuple:
    steps = series["steps"]
    points = series["points"]
    gaps = series.get("gaps")
    phi = series.get("phi")
    m = len(points[0]) if len(points) else 0
    header = ["step"] + [f"x{i + 1}" for i in range(m)] + ["gap", "phi"]
    rows = [header]
    for idx, step in enumerate(steps):
        gap = "" if gaps is None or gaps[idx] is None else _format_number(gaps[idx])
        ph = "" if phi is None or phi[idx] is None else _format_number(phi[idx])
        rows.append(
            [str(int(step))]
            + [_format_number(x) for x in points[idx]]
            + [gap, ph]
        )
    return tuple(rows)


def report_text(report: ReportDocument, format: str = "json") -> str:
    """Render a report: JSON holds everything, CSV only the step series."""
    if format == "json":
        return render_json(report.as_payload())
    if format == "csv":
        series = report.results.get("series")
        if series is None:
            raise ValueError("report has no step series to write as csv")
        return "".join(",".join(row) + "\n" for row in _series_rows(series))
    raise ValueError(f"unknown format {format!r}")


def save_report(report: ReportDocument, path, format: str = "json") -> None:
    text = report_text(report, format)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
