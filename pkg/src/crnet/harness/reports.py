"""CSV emission with an embedded schema line.

Floats are written with ``repr`` so files are byte-identical across runs
with the same inputs.
"""

import csv
import io
import os

import numpy as np

SCHEMA_VERSION = 1


def _fmt(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(schema, columns, rows):
    buf = io.StringIO()
    buf.write(f"# schema: crnet.{schema}/{SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, schema {schema} has {len(columns)}")
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, schema, columns, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(schema, columns, rows))
    return path


def read_csv(path):
    """Return (schema line, header, rows as lists of strings)."""
    with open(path) as fh:
        schema = fh.readline().strip()
        r = list(csv.reader(fh))
    return schema, r[0], r[1:]


class Checks:
    """Named pass/fail checks collected by an experiment run."""

    def __init__(self):
        self.rows = []

    def add(self, name, value, tolerance, passed, note=""):
        self.rows.append((name, float(value), float(tolerance), bool(passed), note))
        return passed

    @property
    def passed(self):
        return all(r[3] for r in self.rows)

    def write(self, path, schema="checks"):
        return write_csv(path, schema, ["check", "value", "tolerance", "passed", "note"], self.rows)

    def lines(self):
        return [f"{'PASS' if r[3] else 'FAIL'}  {r[0]}: {r[1]:.4g} (tol {r[2]:.3g}) {r[4]}".rstrip()
                for r in self.rows]
