"""Result CSVs and key-value fit reports.

Result files have the header ``L,p,tau,N,N_f,P_fail,sigma,master_seed,wall_time_seconds``
and write floats with 17 significant digits so they round-trip exactly.

Fit reports are line oriented::

    # kind = threshold
    p_c0 = 0.10281 ± 0.0021
    residual_chi2_per_dof = 1.07
    # excluded L=5 p=0.07: p <= p_USH(L) = 0.1016

Lines starting with ``#`` are comments. ``+/-`` is accepted in place of ``±``.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

from .montecarlo import FailureEstimate

CSV_FIELDS = ("L", "p", "tau", "N", "N_f", "P_fail", "sigma", "master_seed", "wall_time_seconds")
_INT_FIELDS = {"L", "N", "N_f", "master_seed"}


def fmt_float(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class ResultRow:
    L: int
    p: float
    tau: float
    N: int
    N_f: int
    P_fail: float
    sigma: float
    master_seed: int
    wall_time_seconds: float

    @classmethod
    def from_estimate(cls, L: int, p: float, tau: float, est: FailureEstimate, master_seed: int,
                      wall_time: float) -> "ResultRow":
        return cls(L, p, tau, est.N, est.N_f, est.P_fail, est.sigma, master_seed, wall_time)

    def validate(self) -> None:
        """Check that ``P_fail`` and ``sigma`` follow from ``N`` and ``N_f``."""
        est = FailureEstimate(self.N, self.N_f)
        if not (math.isclose(est.P_fail, self.P_fail, rel_tol=1e-12, abs_tol=1e-300)
                and math.isclose(est.sigma, self.sigma, rel_tol=1e-12, abs_tol=1e-300)):
            raise ValueError(f"inconsistent row: {self}")

    def key(self) -> tuple:
        return (self.L, self.p, self.tau, self.N, self.master_seed)

    def to_csv(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = str(v) if f.name in _INT_FIELDS else fmt_float(v)
        return out

    @classmethod
    def from_csv(cls, rec: dict) -> "ResultRow":
        vals = {k: (int(rec[k]) if k in _INT_FIELDS else float(rec[k])) for k in CSV_FIELDS}
        row = cls(**vals)
        row.validate()
        return row


def read_results(path: str | os.PathLike) -> list[ResultRow]:
    path = Path(path)
    if not path.exists():
        return []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = set(CSV_FIELDS) - set(reader.fieldnames)
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return [ResultRow.from_csv(rec) for rec in reader]


def append_results(path: str | os.PathLike, rows: Iterable[ResultRow]) -> None:
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        if new:
            writer.writeheader()
        for row in rows:
            writer.writerow(row.to_csv())
        fh.flush()


def write_results(stream, rows: Iterable[ResultRow], header: bool = True) -> None:
    writer = csv.DictWriter(stream, fieldnames=CSV_FIELDS, lineterminator="\n")
    if header:
        writer.writeheader()
    for row in rows:
        writer.writerow(row.to_csv())


# -- fit reports --------------------------------------------------------------


@dataclass
class FitReport:
    kind: str
    values: dict  # name -> (value, uncertainty or None)
    chi2_per_dof: float | None = None
    comments: list = None

    def value(self, name: str) -> float:
        return self.values[name][0]

    def error(self, name: str) -> float | None:
        return self.values[name][1]

    def render(self) -> str:
        lines = [f"# kind = {self.kind}"]
        for name, (val, err) in self.values.items():
            if err is None:
                lines.append(f"{name} = {fmt_float(val)}")
            else:
                lines.append(f"{name} = {fmt_float(val)} ± {fmt_float(err)}")
        if self.chi2_per_dof is not None:
            lines.append(f"residual_chi2_per_dof = {fmt_float(self.chi2_per_dof)}")
        lines.extend(f"# {c}" for c in self.comments or [])
        return "\n".join(lines) + "\n"

    def write(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.render(), encoding="utf-8")


def parse_fit_report(text: str) -> FitReport:
    kind = ""
    values: dict = {}
    chi2 = None
    comments = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("kind ="):
                kind = body.split("=", 1)[1].strip()
            else:
                comments.append(body)
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected 'key = value'")
        key, rhs = (s.strip() for s in line.split("=", 1))
        rhs = rhs.replace("+/-", "±")
        if "±" in rhs:
            v, e = rhs.split("±", 1)
            val, err = float(v), float(e)
        else:
            val, err = float(rhs), None
        if key == "residual_chi2_per_dof":
            chi2 = val
        else:
            values[key] = (val, err)
    return FitReport(kind, values, chi2, comments)


def read_fit_report(path: str | os.PathLike) -> FitReport:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"fit report not found: {path}")
    return parse_fit_report(path.read_text(encoding="utf-8"))
