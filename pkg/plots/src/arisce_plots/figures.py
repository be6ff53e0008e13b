"""Render MSE sweep CSVs into the three reproduction figures.

The input files come from the sweep harness: comment lines starting with `#`,
then a header `scheme,sweep_var,sweep_value_db,mse_sum,mse_direct,mse_forward,
pred_sum,pred_direct,pred_forward,trials,seed`.  Prediction columns are empty
for benchmark schemes and rendered, when present, as dashed overlays on top of
the simulated series.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_MARKERS = ("o", "s", "^", "v", "D", "x", "+", "*")
_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str
    x_label: str
    y_label: str
    series: tuple[tuple[str, str], ...]
    output_path: str
    y_log: bool = True
    title: str = ""


@dataclass
class SeriesData:
    scheme: str
    column: str
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)

    @property
    def label(self) -> str:
        return f"{self.scheme} {self.column}"

    @property
    def is_overlay(self) -> bool:
        return self.column.startswith("pred_")


def read_sweep_csv(path: str) -> list[dict]:
    """Rows of a sweep CSV with comment lines stripped."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: no header found")
    return list(csv.DictReader(lines))


def schemes_in(rows: list[dict]) -> list[str]:
    """Scheme tags in order of first appearance."""
    seen: list[str] = []
    for row in rows:
        if row["scheme"] not in seen:
            seen.append(row["scheme"])
    return seen


def _collect(rows: list[dict], scheme: str, column: str, path: str) -> SeriesData:
    if rows and column not in rows[0]:
        raise ValueError(f"{path}: column {column!r} missing from CSV header")
    data = SeriesData(scheme=scheme, column=column)
    for row in rows:
        if row["scheme"] != scheme or not row[column]:
            continue
        data.x.append(float(row["sweep_value_db"]))
        data.y.append(float(row[column]))
    return data


def render(spec: FigureSpec) -> list[str]:
    """Draw every requested series and write the image.

    Simulated series get solid lines with markers; prediction overlays share
    the matching simulated series' color and are dashed.  Empty prediction
    overlays are skipped; an empty simulated series aborts with a diagnostic
    naming it.  Returns the labels actually drawn.
    """
    rows = read_sweep_csv(spec.input_csv)
    collected: list[SeriesData] = []
    for scheme, column in spec.series:
        data = _collect(rows, scheme, column, spec.input_csv)
        if not data.x:
            if data.is_overlay:
                continue
            raise ValueError(
                f"{spec.input_csv}: series ({scheme}, {column}) has no data rows"
            )
        collected.append(data)
    if not collected:
        raise ValueError(f"{spec.input_csv}: nothing to draw")

    # one color per (scheme, quantity) so a prediction shares its series' hue
    color_key: dict[tuple[str, str], str] = {}
    for data in collected:
        key = (data.scheme, data.column.split("_", 1)[1])
        if key not in color_key:
            color_key[key] = _COLORS[len(color_key) % len(_COLORS)]

    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    drawn: list[str] = []
    marker_index = 0
    for data in collected:
        color = color_key[(data.scheme, data.column.split("_", 1)[1])]
        if data.is_overlay:
            ax.plot(data.x, data.y, linestyle="--", color=color, label=data.label)
        else:
            marker = _MARKERS[marker_index % len(_MARKERS)]
            marker_index += 1
            ax.plot(data.x, data.y, linestyle="-", marker=marker, color=color, label=data.label)
        drawn.append(data.label)
    if spec.y_log:
        ax.set_yscale("log")
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="both", linestyle=":", linewidth=0.6)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=150)
    plt.close(fig)
    return drawn


def _series_for(rows: list[dict], columns: tuple[str, ...]) -> tuple[tuple[str, str], ...]:
    series: list[tuple[str, str]] = []
    for scheme in schemes_in(rows):
        for column in columns:
            series.append((scheme, column))
    return tuple(series)


def fig2_spec(input_csv: str, output_path: str) -> FigureSpec:
    """MSE versus the pattern scaling factor: simulated sum/direct/forward
    per scheme plus analytic overlays where available."""
    rows = read_sweep_csv(input_csv)
    return FigureSpec(
        input_csv=input_csv,
        x_label="scaling factor (20*log10(beta), dB)",
        y_label="MSE",
        series=_series_for(
            rows,
            ("mse_sum", "mse_direct", "mse_forward", "pred_sum", "pred_direct", "pred_forward"),
        ),
        output_path=output_path,
        title="Channel-estimation MSE versus scaling factor",
    )


def fig3a_spec(input_csv: str, output_path: str) -> FigureSpec:
    """Sum MSE versus transmit power, one line per scheme."""
    rows = read_sweep_csv(input_csv)
    return FigureSpec(
        input_csv=input_csv,
        x_label="transmit power (dBm)",
        y_label="sum MSE",
        series=_series_for(rows, ("mse_sum", "pred_sum")),
        output_path=output_path,
        title="Channel-estimation MSE versus transmit power",
    )


def fig4_spec(input_csv: str, output_path: str) -> FigureSpec:
    """MSE versus the amplitude budget: sum/direct/forward plus overlays."""
    rows = read_sweep_csv(input_csv)
    return FigureSpec(
        input_csv=input_csv,
        x_label="amplitude budget (10*log10(a_max^2), dB)",
        y_label="MSE",
        series=_series_for(
            rows,
            ("mse_sum", "mse_direct", "mse_forward", "pred_sum", "pred_direct", "pred_forward"),
        ),
        output_path=output_path,
        title="Channel-estimation MSE versus amplitude budget",
    )


FIGURES = {"fig2": fig2_spec, "fig3a": fig3a_spec, "fig4": fig4_spec}
