"""JSON and plain-text renderings of cross-validation reports."""

from __future__ import annotations

import json
from typing import Sequence

from .cv import MetricReport

_COLUMNS = (("Acc.", "accuracy"), ("F-Score(weighted)", "weighted_f1"), ("F-Score(macro)", "macro_f1"))
_CLASS_NAMES = {1: "Poor", 2: "Fair", 3: "Great"}


def avg_std(summary: dict, metric: str) -> str:
    return f"{100 * summary[metric]['mean']:.1f}({100 * summary[metric]['std']:.1f})"


def format_table(reports: Sequence[MetricReport | dict]) -> str:
    """Rows of ``avg(std)`` in percent, one decimal; accepts reports or their dicts."""
    dicts = [r if isinstance(r, dict) else r.to_dict() for r in reports]
    head = ["Task", "System"] + [c for c, _ in _COLUMNS]
    rows = [[d["task"], d["system"]] + [avg_std(d["summary"], m) for _, m in _COLUMNS] for d in dicts]
    widths = [max(len(x) for x in col) for col in zip(head, *rows)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(head), line(["-" * w for w in widths])]
    out += [line(r) for r in rows]
    return "\n".join(out) + "\n"


def format_class_table(report: MetricReport) -> str:
    """Pooled per-class precision/recall plus the collapsed binary view."""
    out = [f"{report.system} / {report.task}", "Category       Precision  Recall"]
    for c, s in report.pooled.per_class.items():
        out.append(f"{_CLASS_NAMES[c]:<14} {100 * s.precision:8.1f}%  {100 * s.recall:5.1f}%")
    b = report.pooled_binary
    out.append(f"{'Poor and Fair':<14} {100 * b.inappropriate.precision:8.1f}%  {100 * b.inappropriate.recall:5.1f}%")
    out.append(f"{'Great (binary)':<14} {100 * b.appropriate.precision:8.1f}%  {100 * b.appropriate.recall:5.1f}%")
    return "\n".join(out) + "\n"


def to_json(reports: Sequence[MetricReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def write_reports(reports: Sequence[MetricReport], json_path, text_path) -> None:
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_json(reports))
    text = format_table(reports) + "\n" + "\n".join(format_class_table(r) for r in reports)
    with open(text_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
