"""
Scaling reports: measured curve with error bars, fitted exponent and the
predicted asymptotic curve, written as CSV + SVG.

Log-correction fits are diagnostics; nothing here asserts them.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from ..errors import EstimatorError, ReportError  # noqa: E402
from ..fitting import MIN_POINTS, fit_log_correction, fit_power_law  # noqa: E402

logger = logging.getLogger(__name__)

# target -> (observable, x label, fixed exponent for the log-correction fit or None)
TARGETS = {
    "volume_tail": ("volume_tail", "n", -0.5),
    "two_point": ("two_point", "|x|", None),
    "three_point": ("three_point_ratio", "d_min", None),
    "vertex_factor": ("vertex_factor", "r", 0.0),
}

plt.rcParams["svg.hashsalt"] = "lrpkit"


@dataclass
class ScalingReport:
    target: str
    csv_path: Path
    svg_path: Path
    fit: object
    log_fit: object = None

    def to_dict(self):
        return {
            "target": self.target,
            "csv": str(self.csv_path),
            "svg": str(self.svg_path),
            "fit": self.fit.to_dict(),
            "log_fit": None if self.log_fit is None else self.log_fit.to_dict(),
        }


def results_frame(results, observable):
    """Records for one observable as a frame with columns x, value, stderr (sorted by x)"""
    if isinstance(results, pd.DataFrame):
        frame = results
    else:
        frame = pd.DataFrame([r for r in results if r.get("observable") == observable and "x" in r])
    if frame.empty:
        return pd.DataFrame(columns=["x", "value", "stderr"])
    if "observable" in frame:
        frame = frame[frame["observable"] == observable]
    frame = frame[["x", "value", "stderr"]].astype(float)
    return frame.groupby("x", as_index=False).mean().sort_values("x").reset_index(drop=True)


def _usable(frame):
    return frame[(frame["x"] > 0) & (frame["value"] > 0)]


def report_scaling(results, target, out_dir, expected=None, predicted=None, name=None):
    """
    `results`: JSONL records (or a frame with x/value/stderr). `expected` is the
    grid the caller requires; `predicted` maps x to the asymptotic prediction.
    """
    if target not in TARGETS:
        raise ReportError(f"unknown report target {target!r}; expected one of {', '.join(TARGETS)}")
    observable, x_label, fixed = TARGETS[target]
    frame = results_frame(results, observable)
    present = set(frame["x"].tolist())
    if expected is not None:
        missing = sorted(float(x) for x in expected if float(x) not in present)
        if missing:
            raise ReportError(f"{target} report is missing grid points {missing}", missing)
    usable = _usable(frame)
    if len(usable) < MIN_POINTS:
        raise ReportError(f"{target} report needs {MIN_POINTS} positive points, got {len(usable)}",
                          sorted(present))

    x, y, s = (usable[c].to_numpy() for c in ("x", "value", "stderr"))
    sigma = s if np.all(s > 0) else None
    fit = fit_power_law(x, y, sigma)
    log_fit = None
    if fixed is not None and np.all(x > 1):
        try:
            log_fit = fit_log_correction(x, y, fixed, sigma)
        except EstimatorError as exc:
            logger.info("log-correction fit skipped: %s", exc)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = name or target
    table = frame.copy()
    table["fit"] = fit.predict(table["x"].clip(lower=1e-300))
    if predicted is not None:
        table["predicted"] = [predicted(v) for v in table["x"]]
    csv_path = out_dir / f"{stem}.csv"
    table.to_csv(csv_path, index=False)

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.errorbar(x, y, yerr=s, fmt="o", ms=3.5, capsize=2, label="measured")
    grid = np.geomspace(x.min(), x.max(), 200)
    ax.plot(grid, fit.predict(grid),
            label=f"fit: exponent {fit.exponent:.4f} ± {fit.exponent_stderr:.2g}")
    if log_fit is not None:
        ax.plot(grid, log_fit.predict(grid), ls=":",
                label=f"log power {log_fit.exponent:.3f} ± {log_fit.exponent_stderr:.2g} (diagnostic)")
    if predicted is not None:
        ax.plot(grid, [predicted(v) for v in grid], ls="--", label="predicted")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(x_label)
    ax.set_ylabel(observable.replace("_", " "))
    ax.legend(fontsize=8)
    fig.tight_layout()
    svg_path = out_dir / f"{stem}.svg"
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("%s report: exponent %.5g +- %.2g -> %s", target, fit.exponent, fit.exponent_stderr, svg_path)
    return ScalingReport(target, csv_path, svg_path, fit, log_fit)
