"""Report container and serialization for scenario runs.

A scenario produces one ScenarioReport: the resolved inputs, every labeled
number it computed, boolean verdicts each tied to a recorded threshold, and
an optional reference entry per label linking the number to the published
value it reproduces.  Serialization is deterministic: fixed key order, repr
floats (shortest round-trip), and atomic file writes, so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

FORMATS = ("json", "csv")

CSV_HEADER = "label,value,paper_value,deviation,tag"


@dataclass(frozen=True)
class Verdict:
    """Boolean outcome plus the comparison it was derived from."""

    passed: bool
    metric: float
    threshold: float
    relation: str = "<"

    def __post_init__(self):
        if self.relation not in ("<", "<=", ">", ">=", "in"):
            raise ParameterError(f"unknown verdict relation {self.relation!r}")
        object.__setattr__(self, "passed", bool(self.passed))
        object.__setattr__(self, "metric", float(self.metric))
        object.__setattr__(self, "threshold", float(self.threshold))


@dataclass(frozen=True)
class Reference:
    """Published value a reported number reproduces, with a source tag."""

    paper_value: float | None
    tag: str = "paper"


@dataclass
class ScenarioReport:
    scenario: str
    parameters: dict = field(default_factory=dict)
    gaussian_factors: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def add_factor(self, label: str, value, paper_value=None, tag="paper"):
        self.gaussian_factors[label] = _scalar(value, label)
        if paper_value is not None:
            self.provenance[label] = Reference(float(paper_value), tag)

    def add_diagnostic(self, label: str, value, paper_value=None, tag="derived"):
        self.diagnostics[label] = _jsonable(value, label)
        if paper_value is not None:
            self.provenance[label] = Reference(float(paper_value), tag)

    def add_verdict(self, label: str, verdict: Verdict):
        self.verdicts[label] = verdict

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "parameters": {k: _jsonable(v, k) for k, v in self.parameters.items()},
            "gaussian_factors": dict(self.gaussian_factors),
            "diagnostics": dict(self.diagnostics),
            "verdicts": {
                k: {
                    "passed": v.passed,
                    "metric": v.metric,
                    "threshold": v.threshold,
                    "relation": v.relation,
                }
                for k, v in self.verdicts.items()
            },
            "provenance": {
                k: {"paper_value": r.paper_value, "tag": r.tag}
                for k, r in self.provenance.items()
            },
        }


def _scalar(value, label: str) -> float:
    v = float(value)
    if not np.isfinite(v):
        raise ParameterError(f"report value {label!r} is not finite: {v!r}")
    return v


def _jsonable(value, label: str):
    """Coerce a report payload to JSON-ready primitives.

    Complex numbers become {"re": x, "im": y} so every numeric appears
    identically in both output formats; arrays become lists.
    """
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        c = complex(value)
        if not (np.isfinite(c.real) and np.isfinite(c.imag)):
            raise ParameterError(f"report value {label!r} is not finite: {c!r}")
        return {"re": c.real, "im": c.imag}
    if isinstance(value, (float, np.floating)):
        return _scalar(value, label)
    if isinstance(value, np.ndarray):
        return [_jsonable(v, label) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v, label) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v, f"{label}.{k}") for k, v in value.items()}
    raise ParameterError(f"cannot serialize report value {label!r}: {type(value)}")


def to_json(report: ScenarioReport) -> str:
    return json.dumps(report.as_dict(), indent=2) + "\n"


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    text = str(value)
    if any(ch in text for ch in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _csv_rows_for(label: str, value, ref: Reference | None, tag: str, rows: list):
    """Flatten one labeled payload into label,value rows.

    Lists index as label[i]; complex values split into label.re/label.im;
    the reference value and deviation attach to plain scalars only.
    """
    if isinstance(value, dict) and set(value) == {"re", "im"}:
        _csv_rows_for(f"{label}.re", value["re"], None, tag, rows)
        _csv_rows_for(f"{label}.im", value["im"], None, tag, rows)
        return
    if isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _csv_rows_for(f"{label}[{i}]", v, None, tag, rows)
        return
    if isinstance(value, dict):
        for k, v in value.items():
            _csv_rows_for(f"{label}.{k}", v, None, tag, rows)
        return
    paper_value = None
    deviation = None
    if ref is not None and ref.paper_value is not None and isinstance(value, float):
        paper_value = ref.paper_value
        deviation = abs(value - ref.paper_value)
        tag = ref.tag
    rows.append(
        ",".join(
            [
                _csv_cell(label),
                _csv_cell(value),
                _csv_cell(paper_value),
                _csv_cell(deviation),
                _csv_cell(tag),
            ]
        )
    )


def to_csv(report: ScenarioReport) -> str:
    data = report.as_dict()
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    rows: list = []
    _csv_rows_for("scenario", data["scenario"], None, "id", rows)
    for k, v in data["parameters"].items():
        _csv_rows_for(k, v, None, "parameter", rows)
    for k, v in data["gaussian_factors"].items():
        _csv_rows_for(k, v, report.provenance.get(k), "factor", rows)
    for k, v in data["diagnostics"].items():
        _csv_rows_for(k, v, report.provenance.get(k), "derived", rows)
    for k, v in data["verdicts"].items():
        _csv_rows_for(f"{k}.passed", v["passed"], None, "verdict", rows)
        _csv_rows_for(f"{k}.metric", v["metric"], None, "verdict", rows)
        _csv_rows_for(f"{k}.threshold", v["threshold"], None, "verdict", rows)
    for row in rows:
        out.write(row + "\n")
    return out.getvalue()


def serialize(report: ScenarioReport, fmt: str) -> str:
    if fmt == "json":
        return to_json(report)
    if fmt == "csv":
        return to_csv(report)
    raise ParameterError(f"unknown report format {fmt!r}; expected one of {FORMATS}")


def write_text(path: str, text: str):
    """Write atomically: temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".report-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: ScenarioReport, path: str, fmt: str):
    write_text(path, serialize(report, fmt))
