"""CSV ingestion and report serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import CONTINUOUS, DISCRETE, Dataset, TestReport, from_arrays
from .dgp import RejectionTable
from .errors import HetfxError, InvalidConfig, MissingColumn, ParseError

FORMATS = ("json", "csv", "text")


class IoError(HetfxError):
    exit_code = 2


@dataclass(frozen=True)
class ColumnMap:
    """Which header names hold Y, D, Z and the covariates.

    ``covariates`` is a sequence of ``(name, kind)`` pairs with kind
    ``"discrete"`` or ``"continuous"``.
    """

    outcome: str
    treatment: str
    instrument: str
    covariates: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        covs = tuple((str(n), str(k)) for n, k in self.covariates)
        object.__setattr__(self, "covariates", covs)
        names = [self.outcome, self.treatment, self.instrument] + [n for n, _ in covs]
        if len(set(names)) != len(names):
            raise InvalidConfig(f"column names must be distinct, got {names}")
        for name, kind in covs:
            if kind not in (DISCRETE, CONTINUOUS):
                raise InvalidConfig(f"covariate {name!r} has unknown kind {kind!r}")

    @property
    def names(self) -> list[str]:
        return [self.outcome, self.treatment, self.instrument] + [n for n, _ in self.covariates]

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(k for _, k in self.covariates)

    @classmethod
    def parse_covariates(cls, spec: str) -> tuple[tuple[str, str], ...]:
        """``"X1:discrete,X2"`` to pairs; the kind defaults to discrete."""
        out = []
        for item in filter(None, (s.strip() for s in spec.split(","))):
            name, _, kind = item.partition(":")
            out.append((name.strip(), (kind.strip() or DISCRETE)))
        return tuple(out)


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"row {row}, column {column!r}: cannot parse {text!r} as a number",
                         row=row, column=column) from None
    if not math.isfinite(value):
        raise ParseError(f"row {row}, column {column!r}: non-finite value {text!r}",
                         row=row, column=column)
    return value


def read_csv(path, cmap: ColumnMap, kinds: Sequence[str] | None = None) -> Dataset:
    """Load a validated dataset; rows are numbered from 1 after the header."""
    kinds = tuple(kinds) if kinds is not None else cmap.kinds
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise MissingColumn(f"{path}: empty file, header row required")
            header = [h.strip() for h in header]
            missing = [c for c in cmap.names if c not in header]
            if missing:
                raise MissingColumn(f"{path}: missing column(s) {missing}")
            pos = [header.index(c) for c in cmap.names]
            rows = []
            for r, raw in enumerate(reader, start=1):
                if not raw or all(not cell.strip() for cell in raw):
                    continue
                if len(raw) < len(header):
                    raise ParseError(f"row {r}: expected {len(header)} fields, got {len(raw)}",
                                     row=r)
                rows.append([_parse_float(raw[p].strip(), r, c) for p, c in zip(pos, cmap.names)])
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    arr = np.array(rows, dtype=float).reshape(-1, len(cmap.names))
    return from_arrays(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3:], kinds)


def write_dataset_csv(dataset: Dataset, path, names: Sequence[str] | None = None) -> None:
    p = dataset.x.shape[1]
    names = list(names) if names else ["Y", "D", "Z"] + [f"X{k + 1}" for k in range(p)]
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for obs in dataset:
                w.writerow([repr(float(obs.y)), int(obs.d), int(obs.z)]
                           + [repr(float(v)) for v in obs.x])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def _report_text(report: TestReport) -> str:
    lines = [
        f"branch: {report.branch}",
        f"n: {report.n}",
        f"statistic: {report.statistic:.6f}",
        f"p-value: {report.p_value:.4f}",
    ]
    for a, c in sorted(report.critical_values.items()):
        verdict = "reject" if report.reject(a) else "do not reject"
        lines.append(f"critical value (alpha={a:g}): {c:.6f}  [{verdict}]")
    lines += [f"bootstrap reps: {report.bootstrap_reps}",
              f"grid: {report.grid_sizes[0]} x {report.grid_sizes[1]}",
              f"seed: {report.seed}"]
    return "\n".join(lines) + "\n"


def _report_csv(report: TestReport) -> str:
    d = report.to_dict()
    head = ["statistic", "p_value", "n", "bootstrap_reps", "seed", "branch"]
    vals = [repr(d["statistic"]), repr(d["p_value"]), d["n"], d["bootstrap_reps"], d["seed"],
            d["branch"]]
    for a, c in sorted(report.critical_values.items()):
        head.append(f"crit_{a:g}")
        vals.append(repr(c))
    return ",".join(head) + "\n" + ",".join(str(v) for v in vals) + "\n"


def _table_text(table: RejectionTable) -> str:
    lines = [f"replicates: {table.reps}, bootstrap reps: {table.bootstrap_reps}"]
    for rec in table.to_records():
        lines.append(f"dgp={rec['dgp']} n={rec['n']} pz={rec['pz']:g} rho={rec['rho']:g} "
                     f"gamma={rec['gamma']:g} alpha={rec['alpha']:g}: {rec['rate']:.4f}"
                     f" ({rec['completed']} ok, {rec['failures']} failed)")
    return "\n".join(lines) + "\n"


def write_report(report: TestReport | RejectionTable, fmt: str = "json") -> str:
    """Serialize a test report or a rejection table as json, csv or text."""
    if fmt not in FORMATS:
        raise InvalidConfig(f"format must be one of {FORMATS}")
    if isinstance(report, RejectionTable):
        if fmt == "json":
            return report.to_json()
        return report.to_csv() if fmt == "csv" else _table_text(report)
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2)
    return _report_csv(report) if fmt == "csv" else _report_text(report)


def read_report(text: str) -> TestReport:
    return TestReport.from_dict(json.loads(text))


def save(text: str, path) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None
