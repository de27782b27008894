"""Summary tables with significance markers and cumulative-curve exports."""

from __future__ import annotations

import csv
from collections import defaultdict
from itertools import combinations
from pathlib import Path

import numpy as np

from awae.evaluation import ComparisonResult, cumulative_mean_curve, paired_t_test, write_comparisons
from awae.stream import DRIFT_TYPES

LEARNER_ORDER = ("gnb", "ht", "mlp")


def metric_for(drift_type: str) -> str:
    """Accuracy on synthetic drift streams, balanced accuracy on file-based streams."""
    return "accuracy" if drift_type in DRIFT_TYPES else "balanced_accuracy"


def _ordered(values, preferred=()) -> list:
    seen = list(dict.fromkeys(values))
    head = [v for v in preferred if v in seen]
    return head + [v for v in seen if v not in head]


class Report:
    """Per-method summary of a results table.

    ``pairing`` selects the t-test pairing unit: ``"seed"`` pairs per-seed mean
    scores, ``"chunk"`` pairs every (seed, chunk) score.
    """

    def __init__(self, rows: list[dict], pairing: str = "seed"):
        if pairing not in ("seed", "chunk"):
            raise ValueError(f"pairing must be 'seed' or 'chunk', got {pairing!r}")
        self.rows = rows
        self.pairing = pairing
        self.methods = _ordered(r["method"] for r in rows)
        self.learners = _ordered((r["learner"] for r in rows), LEARNER_ORDER)
        self.drifts = _ordered((r["drift_type"] for r in rows), DRIFT_TYPES)
        self.scores: dict[tuple, dict[tuple, float]] = defaultdict(dict)
        for r in rows:
            key = (r["method"], r["learner"], r["drift_type"])
            self.scores[key][(r["seed"], r["chunk"])] = r[metric_for(r["drift_type"])]

    def seed_means(self, method, learner, drift) -> dict[int, float]:
        per_seed = defaultdict(list)
        for (seed, _), v in self.scores.get((method, learner, drift), {}).items():
            per_seed[seed].append(v)
        return {s: float(np.mean(v)) for s, v in sorted(per_seed.items())}

    def mean(self, method, learner, drift) -> float | None:
        """Grand mean of per-seed means."""
        means = self.seed_means(method, learner, drift)
        return float(np.mean(list(means.values()))) if means else None

    def pooled_mean(self, method, learner, drift) -> float | None:
        values = list(self.scores.get((method, learner, drift), {}).values())
        return float(np.mean(values)) if values else None

    def _paired(self, a, b, learner, drift):
        if self.pairing == "seed":
            sa, sb = self.seed_means(a, learner, drift), self.seed_means(b, learner, drift)
        else:
            sa, sb = self.scores.get((a, learner, drift), {}), self.scores.get((b, learner, drift), {})
        common = sorted(set(sa) & set(sb))
        return [sa[k] for k in common], [sb[k] for k in common]

    def comparisons(self) -> list[tuple[dict, ComparisonResult]]:
        out = []
        for learner in self.learners:
            for drift in self.drifts:
                present = [m for m in self.methods if (m, learner, drift) in self.scores]
                for a, b in combinations(present, 2):
                    xa, xb = self._paired(a, b, learner, drift)
                    if len(xa) < 3:
                        continue
                    out.append(({"learner": learner, "drift_type": drift}, paired_t_test(xa, xb, a, b)))
        return out

    def markers(self) -> dict[tuple, list[int]]:
        """1-based indexes of the methods each (method, learner, drift) cell significantly beats."""
        index = {m: i + 1 for i, m in enumerate(self.methods)}
        beaten = defaultdict(list)
        for ctx, c in self.comparisons():
            if not c.significant:
                continue
            winner, loser = (c.method_a, c.method_b) if c.mean_a > c.mean_b else (c.method_b, c.method_a)
            beaten[(winner, ctx["learner"], ctx["drift_type"])].append(index[loser])
        return {k: sorted(v) for k, v in beaten.items()}

    def marker_text(self, method, learner, drift, markers) -> str:
        beaten = markers.get((method, learner, drift), [])
        others = [m for m in self.methods if m != method and (m, learner, drift) in self.scores]
        if not beaten:
            return "-"
        if len(beaten) == len(others) and len(others) > 1:
            return "all"
        return ",".join(str(i) for i in beaten)

    def table_rows(self) -> list[dict]:
        markers = self.markers()
        rows = []
        for i, m in enumerate(self.methods, start=1):
            for learner in self.learners:
                for drift in self.drifts:
                    mean = self.mean(m, learner, drift)
                    if mean is None:
                        continue
                    rows.append({
                        "index": i,
                        "method": m,
                        "learner": learner,
                        "drift_type": drift,
                        "metric": metric_for(drift),
                        "mean": mean,
                        "pooled_mean": self.pooled_mean(m, learner, drift),
                        "beats": self.marker_text(m, learner, drift, markers),
                    })
        return rows

    def render(self) -> str:
        """Text table: one row per method, one column per (learner, drift)."""
        markers = self.markers()
        columns = [(lk, d) for lk in self.learners for d in self.drifts]
        header = ["#", "method"] + [f"{lk}/{d}" for lk, d in columns]
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        for i, m in enumerate(self.methods, start=1):
            cells = [str(i), m]
            for lk, d in columns:
                mean = self.mean(m, lk, d)
                if mean is None:
                    cells.append("")
                    continue
                mark = self.marker_text(m, lk, d, markers) if len(self.methods) > 1 else ""
                cells.append(f"{mean:.3f}" + (f" ({mark})" if mark else ""))
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def write_report(rows: list[dict], out_dir: Path, pairing: str = "seed") -> Report:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = Report(rows, pairing)
    (out_dir / "table.md").write_text(report.render(), encoding="utf-8")

    table = report.table_rows()
    with (out_dir / "table.csv").open("w", newline="", encoding="utf-8") as fh:
        fh.write("# awae-table v1\n")
        writer = csv.DictWriter(fh, fieldnames=list(table[0]) if table else ["index"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(table)

    comps = report.comparisons()
    write_comparisons([c for _, c in comps], out_dir / "comparisons.csv", [ctx for ctx, _ in comps])

    curves_dir = out_dir / "curves"
    curves_dir.mkdir(exist_ok=True)
    by_run = defaultdict(list)
    for r in rows:
        by_run[r["run_id"]].append(r)
    for run_id, run_rows in by_run.items():
        run_rows.sort(key=lambda r: r["chunk"])
        metric = metric_for(run_rows[0]["drift_type"])
        curve = cumulative_mean_curve([r[metric] for r in run_rows])
        with (curves_dir / f"{run_id}.csv").open("w", newline="", encoding="utf-8") as fh:
            fh.write("# awae-curve v1\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["chunk", f"cumulative_{metric}"])
            for (_, value), r in zip(curve, run_rows):
                writer.writerow([r["chunk"], repr(value)])
    return report
