"""Audit trend panels: overlap-class and density-bound statistics versus R.

Input is one audit JSON per scale (the `audit` subcommand's output).  With a
single scale the panels show plain points; with several, a dashed
least-squares trend line is drawn and its slope annotated.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import read_audit_json


@dataclass(frozen=True)
class AuditFigureSpec:
    audit_jsons: tuple
    output: str
    title: str = ""


@dataclass(frozen=True)
class AuditFigureResult:
    output: str
    scales: tuple
    overlap_trend: float | None
    density_trend: float | None


def _panel(ax, scales, values, label):
    ax.semilogx(scales, values, "o", color="tab:blue")
    trend = None
    if len(scales) >= 2 and all(v > 0 for v in values):
        slope, intercept = np.polyfit(np.log(scales), np.log(values), 1)
        grid = np.geomspace(min(scales), max(scales), 32)
        ax.plot(grid, np.exp(intercept) * grid**slope, "--", color="tab:red", alpha=0.8)
        trend = float(slope)
        ax.annotate(f"trend slope {slope:+.3f}", xy=(0.05, 0.9), xycoords="axes fraction")
    ax.set_xlabel("spatial scale R")
    ax.set_ylabel(label)
    ax.grid(True, which="both", alpha=0.25)
    return trend


def plot_audit(spec: AuditFigureSpec) -> AuditFigureResult:
    if not spec.audit_jsons:
        raise ValueError("no audit reports given; need at least one audit JSON")
    payloads = sorted((read_audit_json(p) for p in spec.audit_jsons), key=lambda p: p["R"])
    scales = [p["R"] for p in payloads]
    overlap = [p["overlap_audit"]["max_statistic"] for p in payloads]
    density = [p["density_audit"]["max_ratio"] for p in payloads]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.2))
    t1 = _panel(ax1, scales, overlap, "overlap-class statistic")
    t2 = _panel(ax2, scales, density, "density-bound ratio")
    if spec.title:
        fig.suptitle(spec.title)
    out = Path(spec.output)
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return AuditFigureResult(
        output=str(out), scales=tuple(scales), overlap_trend=t1, density_trend=t2
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("audit_jsons", nargs="+")
    parser.add_argument("--out", required=True)
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)
    try:
        result = plot_audit(
            AuditFigureSpec(audit_jsons=tuple(args.audit_jsons), output=args.out, title=args.title)
        )
    except (OSError, ValueError) as exc:
        print(f"tangmax-plot-audit: {exc}")
        return 1
    print(f"wrote {result.output} ({len(result.scales)} scales)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
