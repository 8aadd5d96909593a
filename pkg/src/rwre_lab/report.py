"""Report rows and their CSV / JSON-lines serialization.

One row per (experiment, parameters, metric, seed).  Numbers are written
with 12 significant digits; rows are sorted by key before writing so the
byte content is independent of execution order.  The wall-time column is
informational and excluded from determinism comparisons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

CSV_HEADER = "experiment,params,metric,value,stderr,seed,wall_time_s"


def fmt12(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.12g}"


@dataclass
class ReportRow:
    experiment: str
    params: dict
    metric: str
    value: float
    stderr: float | None = None
    seed: int | None = None
    wall_time_s: float = 0.0

    def params_text(self) -> str:
        items = sorted(self.params.items())
        return ";".join(f"{k}={fmt12(v)}" for k, v in items)

    def sort_key(self):
        return (self.experiment, self.params_text(), self.metric,
                -1 if self.seed is None else self.seed)

    def csv_line(self) -> str:
        seed = "" if self.seed is None else str(self.seed)
        return ",".join([
            self.experiment,
            self.params_text().replace(",", "|"),
            self.metric,
            fmt12(self.value),
            fmt12(self.stderr),
            seed,
            f"{self.wall_time_s:.6f}",
        ])

    def json_obj(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": {k: v for k, v in sorted(self.params.items())},
            "metric": self.metric,
            "value": self.value,
            "stderr": self.stderr,
            "seed": self.seed,
            "wall_time_s": self.wall_time_s,
        }


def write_reports(rows, csv_path) -> None:
    """Write sorted rows as CSV plus a JSON-lines mirror next to it."""
    rows = sorted(rows, key=lambda r: r.sort_key())
    csv_path = str(csv_path)
    with open(csv_path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.csv_line() + "\n")
    jsonl_path = csv_path[:-4] + ".jsonl" if csv_path.endswith(".csv") else csv_path + ".jsonl"
    with open(jsonl_path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row.json_obj(), sort_keys=True) + "\n")
