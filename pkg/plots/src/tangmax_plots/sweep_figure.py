"""Log-log sweep figure: N(R) scatter, least-squares line, reference slope.

The science values come verbatim from the sweep CSV and the fit JSON; the
only computation done here is an ordinary least squares line when no fit
JSON is supplied, and that must agree with any supplied JSON to 3 decimals
or the figure is refused.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import read_fit_json, read_sweep_csv


@dataclass(frozen=True)
class FigureSpec:
    sweep_csv: str
    output: str
    fit_json: str = ""
    reference_slope: float | None = None
    title: str = ""


@dataclass(frozen=True)
class SweepFigureResult:
    output: str
    legend_slope: float
    reference_slope: float | None
    points: int


def _ols(scales, ratios):
    logR = np.log(np.asarray(scales))
    logN = np.log(np.asarray(ratios))
    slope, intercept = np.polyfit(logR, logN, 1)
    return float(slope), float(intercept)


def plot_sweep(spec: FigureSpec) -> SweepFigureResult:
    table = read_sweep_csv(spec.sweep_csv)
    if len(table.rows) < 4:
        raise ValueError(f"need at least 4 sweep rows, got {len(table.rows)}")
    scales, ratios = table.scales, table.ratios
    if any(v <= 0 for v in ratios):
        raise ValueError("ratios must be positive on a log-log plot")
    fit = read_fit_json(spec.fit_json) if spec.fit_json else None
    ols_slope, ols_intercept = _ols(scales, ratios)
    if fit is not None:
        slope, intercept = float(fit["slope"]), float(fit["intercept"])
        if abs(slope - ols_slope) > 5e-4:
            raise ValueError(
                f"fit JSON slope {slope:.6f} disagrees with the rows' least squares "
                f"{ols_slope:.6f}; refusing to draw a misleading legend"
            )
    else:
        slope, intercept = ols_slope, ols_intercept
    reference = spec.reference_slope
    if reference is None and fit is not None and fit.get("s0_ref") is not None:
        reference = float(fit["s0_ref"])

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(scales, ratios, "o", color="tab:blue", label="measured N(R)")
    grid = np.geomspace(min(scales), max(scales), 64)
    ax.loglog(
        grid,
        np.exp(intercept) * grid**slope,
        "-",
        color="tab:blue",
        alpha=0.8,
        label=f"fit slope {slope:.3f}",
    )
    if reference is not None:
        anchor = ratios[0] / (scales[0] ** reference)
        ax.loglog(
            grid,
            anchor * grid**reference,
            "--",
            color="tab:red",
            label=f"reference slope {reference:.3f}",
        )
    ax.set_xlabel("spatial scale R")
    ax.set_ylabel("norm ratio N(R)")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    ax.grid(True, which="both", alpha=0.25)
    out = Path(spec.output)
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return SweepFigureResult(
        output=str(out),
        legend_slope=round(slope, 3),
        reference_slope=None if reference is None else round(reference, 3),
        points=len(scales),
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("sweep_csv")
    parser.add_argument("--fit", default="", help="fit JSON produced alongside the sweep")
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    parser.add_argument("--reference", type=float, default=None, help="reference slope")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)
    try:
        result = plot_sweep(
            FigureSpec(
                sweep_csv=args.sweep_csv,
                output=args.out,
                fit_json=args.fit,
                reference_slope=args.reference,
                title=args.title,
            )
        )
    except (OSError, ValueError) as exc:
        print(f"tangmax-plot-sweep: {exc}")
        return 1
    print(f"wrote {result.output} (legend slope {result.legend_slope:.3f})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
