"""Learning-curve records and the CSV format shared by all runs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

CSV_HEADER = ("algorithm", "seed", "env_steps", "avg_return")


@dataclass
class RunRecord:
    algorithm: str
    seed: int
    points: list[tuple[int, float]] = field(default_factory=list)

    def append(self, env_steps: int, avg_return: float) -> None:
        if self.points and env_steps <= self.points[-1][0]:
            raise ValueError(
                f"env_steps must increase strictly ({env_steps} after {self.points[-1][0]})")
        self.points.append((int(env_steps), float(avg_return)))

    @property
    def steps(self) -> list[int]:
        return [p[0] for p in self.points]

    @property
    def returns(self) -> list[float]:
        return [p[1] for p in self.points]

    @property
    def final_return(self) -> float:
        return self.points[-1][1]


def records_to_csv(records) -> str:
    """Serialize records, sorted by seed then env_steps, with LF endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    rows = [(r.algorithm, r.seed, s, v) for r in records for s, v in r.points]
    rows.sort(key=lambda row: (row[1], row[2]))
    for alg, seed, steps, value in rows:
        writer.writerow((alg, seed, steps, repr(float(value))))
    return buf.getvalue()


def write_csv(records, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv(records))
    return path


def read_csv(path) -> list[RunRecord]:
    by_key: dict[tuple[str, int], RunRecord] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for row in reader:
            alg, seed, steps, value = row
            key = (alg, int(seed))
            rec = by_key.setdefault(key, RunRecord(alg, int(seed)))
            rec.append(int(steps), float(value))
    return list(by_key.values())
