"""CSV/JSON emitters with fixed column order and number formatting.

Statistics (LLR magnitudes, means) are written with 6 decimals, fractions
and percentages with 6 significant digits, so re-running a configuration
produces byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import subprocess
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .channel_sim import BlerComplexityPoint, DistributionStats
from .orbgrand import PatternBook


def fmt_frac(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.6g}"


def fmt_stat(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.6f}"


def atomic_write(path, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def bler_csv(points: Sequence[tuple[str, BlerComplexityPoint]]) -> str:
    n_delta = max((len(p.deltas) for _, p in points), default=0)
    header = ["policy", "ebn0_db", "trials", "block_errors", "bler", "bler_ci", "complexity_pct",
              "low_confidence"] + [f"delta_{i}" for i in range(n_delta)]
    rows = []
    for name, p in points:
        deltas = [fmt_frac(d) for d in p.deltas] + [""] * (n_delta - len(p.deltas))
        rows.append([name, fmt_stat(p.ebn0_db), str(p.trials), str(p.block_errors), fmt_frac(p.bler),
                     fmt_frac(p.bler_ci), fmt_frac(p.complexity_pct), str(int(p.low_confidence))] + deltas)
    return _csv_text(header, rows)


def table1_csv(rows: Sequence[tuple[float, dict, dict, dict]]) -> str:
    """Rows of (ebn0_db, fractions over all trials, fractions over error-bearing trials, counts)."""
    header = ["ebn0_db", "p_low", "count", "fraction", "fraction_given_errors"]
    out = []
    for ebn0, frac_all, frac_noisy, counts in rows:
        for p in frac_all:
            out.append([fmt_stat(ebn0), "uncorrectable" if p is None else str(p), str(counts[p]),
                        fmt_frac(frac_all[p]), fmt_frac(frac_noisy[p])])
    return _csv_text(header, out)


def dist_csv(rows: Sequence[tuple[float, str, DistributionStats]]) -> str:
    header = ["ebn0_db", "condition", "bucket", "rank", "mean_mag", "mean_diff", "sample_count"]
    out = []
    for ebn0, cond, d in rows:
        for i in range(d.mean_mag.size):
            out.append([fmt_stat(ebn0), cond, str(d.condition), str(i), fmt_stat(float(d.mean_mag[i])),
                        fmt_stat(float(d.mean_diff[i])), str(d.sample_count)])
    return _csv_text(header, out)


def patterns_csv(book: PatternBook) -> str:
    rows = ([str(i + 1), str(int(w)), " ".join(map(str, p))] for i, (p, w) in enumerate(zip(book.patterns, book.weights)))
    return _csv_text(["index", "weight", "parts"], rows)


def points_json(points: Sequence[tuple[str, BlerComplexityPoint]]) -> str:
    return json.dumps([{"policy": name, **asdict(p)} for name, p in points], indent=2, sort_keys=True) + "\n"


def points_from_json(text: str) -> list[tuple[str, BlerComplexityPoint]]:
    out = []
    for row in json.loads(text):
        name = row.pop("policy")
        row["deltas"] = tuple(row["deltas"])
        out.append((name, BlerComplexityPoint(**row)))
    return out


def emit_report(points: Sequence[tuple[str, BlerComplexityPoint]], path, fmt: str = "csv") -> Path:
    if fmt == "csv":
        return atomic_write(path, bler_csv(points))
    if fmt == "json":
        return atomic_write(path, points_json(points))
    raise ValueError(f"unknown report format {fmt!r}")


def tool_version() -> str:
    """Package version, with ``+g<sha>`` appended when run from a git checkout."""
    try:
        sha = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).parent, timeout=5, check=True).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        return __version__
    return f"{__version__}+g{sha}" if sha else __version__


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    config_digest: str
    seed: int
    tool_version: str = field(default_factory=tool_version)
    started_at: str = field(default_factory=now)
    finished_at: str | None = None
    command: str = "run"
    status: str = "running"
    error: str | None = None
    outputs: list = field(default_factory=list)

    def finish(self, status="ok", error=None):
        self.status = status
        self.error = error
        self.finished_at = now()

    def write(self, out_dir) -> Path:
        return atomic_write(Path(out_dir) / "manifest.json", json.dumps(asdict(self), indent=2) + "\n")
