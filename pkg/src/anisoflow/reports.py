"""Structured pass/fail reports shared by the checks and experiment runners."""

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Metric:
    name: str
    value: float
    threshold: float
    passed: bool
    relation: str = "<="

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {_fmt(self.value)} {self.relation} {_fmt(self.threshold)}"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    try:
        return format(float(v), ".17g")
    except (TypeError, ValueError):
        return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return repr(obj)


@dataclass
class ExperimentReport:
    """Named check with echoed configuration; passes iff every metric passes."""

    id: str
    config: dict = field(default_factory=dict)
    metrics: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def add(self, name, value, threshold, passed=None, relation="<="):
        if passed is None:
            if relation == "<=":
                passed = value <= threshold
            elif relation == "<":
                passed = value < threshold
            elif relation == ">=":
                passed = value >= threshold
            elif relation == ">":
                passed = value > threshold
            elif relation == "==":
                passed = value == threshold
            else:
                raise ValueError(f"unknown relation {relation!r}")
        m = Metric(name, value, threshold, bool(passed), relation)
        self.metrics.append(m)
        return m

    def flag(self, name, value):
        """Informational metric that never fails the report."""
        return self.add(name, value, "info", passed=True, relation="is")

    @property
    def passed(self):
        return all(m.passed for m in self.metrics)

    def metric(self, name):
        for m in self.metrics:
            if m.name == name:
                return m
        raise KeyError(name)

    def summary(self):
        head = f"{self.id}: {'PASS' if self.passed else 'FAIL'}"
        return "\n".join([head] + ["  " + m.line() for m in self.metrics])

    def write(self, out_dir):
        """Write ``<id>_metrics.csv`` and ``<id>_summary.txt``; return their paths."""
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f"{self.id}_metrics.csv")
        txt_path = os.path.join(out_dir, f"{self.id}_summary.txt")
        params = json.dumps(_jsonable(self.config), sort_keys=True)
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["check", "parameters", "measured", "tolerance", "pass"])
            for m in self.metrics:
                w.writerow([m.name, params, _fmt(m.value), _fmt(m.threshold), m.passed])
        with open(txt_path, "w") as fh:
            fh.write(self.summary() + "\n")
            fh.write("config: " + params + "\n")
            for a in self.artifacts:
                fh.write(f"artifact: {os.path.relpath(a, out_dir)}\n")
        return [csv_path, txt_path]
