"""Render a sweep CSV as a line chart, one series per scheme.

The input is the delimited table written by the ``codedcache`` sweep
commands: a header row followed by one row per (sweep value, scheme).
``render`` groups rows by the series column, draws one line per group
over the chosen y column, and overlays the lower bound from the
``converse`` column as a dashed series. Rows whose y cell is empty
(bound-only rows, infeasible markers) are skipped.

Rendering is deterministic: the same CSV bytes produce the same series
data, series order, and colors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass

from matplotlib.figure import Figure

# Friendly alias for the column the sweep writer calls simulated_mean.
Y_ALIASES = {"simulated": "simulated_mean"}

BOUND_STYLE = {"linestyle": "--", "color": "black", "linewidth": 1.4}


class PlotError(ValueError):
    """The CSV cannot be turned into the requested chart."""


@dataclass(frozen=True)
class PlotSpec:
    """What to read, which columns to use, and where the image goes.

    ``converse_column`` names the column drawn as the dashed bound
    series; set it to None to leave the bound off the chart.
    """

    source: str
    output: str
    x_column: str = "sweep_value"
    series_column: str = "scheme"
    y_column: str = "exact"
    converse_column: str | None = "converse"
    title: str = ""

    def resolved_y(self) -> str:
        return Y_ALIASES.get(self.y_column, self.y_column)


def _read_rows(path: str) -> tuple[list[str], list[dict]]:
    """Parse the CSV into a header and a list of row dicts."""
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            header = reader.fieldnames
            rows = list(reader)
    except OSError as exc:
        raise PlotError(f"cannot read {path}: {exc}") from exc
    except csv.Error as exc:
        raise PlotError(f"{path} is not parseable CSV: {exc}") from exc
    if not header:
        raise PlotError(f"{path} has no header row")
    if not rows:
        raise PlotError(f"{path} has no data rows")
    return list(header), rows


def _check_columns(spec: PlotSpec, header: list[str]) -> None:
    needed = [spec.x_column, spec.series_column, spec.resolved_y()]
    if spec.converse_column is not None:
        needed.append(spec.converse_column)
    missing = [name for name in needed if name not in header]
    if missing:
        raise PlotError(
            "missing column(s) "
            + ", ".join(repr(name) for name in missing)
            + f" in {spec.source}; header has {', '.join(header)}"
        )


def _x_sort_key(rows: list[dict], column: str):
    """Sort x values numerically when every cell parses as a float."""
    try:
        for row in rows:
            float(row[column])
    except ValueError:
        return lambda value: value
    return float


def _series_points(rows: list[dict], spec: PlotSpec) -> dict[str, list]:
    """Group rows by series id and keep points with a numeric y cell."""
    key = _x_sort_key(rows, spec.x_column)
    y_col = spec.resolved_y()
    groups: dict[str, list] = {}
    for row in rows:
        cell = (row.get(y_col) or "").strip()
        if not cell:
            continue
        try:
            y = float(cell)
        except ValueError as exc:
            raise PlotError(
                f"column {y_col!r} holds non-numeric value {cell!r}"
            ) from exc
        groups.setdefault(row[spec.series_column], []).append(
            (key(row[spec.x_column]), y)
        )
    for name in groups:
        groups[name].sort(key=lambda point: point[0])
    return {name: groups[name] for name in sorted(groups)}


def _bound_points(rows: list[dict], spec: PlotSpec) -> list:
    """One dashed point per x: the first non-empty bound cell there."""
    key = _x_sort_key(rows, spec.x_column)
    seen: dict = {}
    for row in rows:
        cell = (row.get(spec.converse_column) or "").strip()
        if not cell:
            continue
        x = key(row[spec.x_column])
        if x not in seen:
            try:
                seen[x] = float(cell)
            except ValueError as exc:
                raise PlotError(
                    f"column {spec.converse_column!r} holds non-numeric "
                    f"value {cell!r}"
                ) from exc
    return sorted(seen.items())


def render(spec: PlotSpec) -> Figure:
    """Draw the chart described by ``spec`` and save it to ``spec.output``.

    Returns the figure so callers and tests can inspect the series. One
    solid line per distinct series id, legend labeled by that id, and a
    dashed bound line when the converse column is requested and holds
    values. A single-row CSV yields a single-point chart.
    """
    header, rows = _read_rows(spec.source)
    _check_columns(spec, header)

    groups = _series_points(rows, spec)
    bound = _bound_points(rows, spec) if spec.converse_column else []
    if not groups and not bound:
        raise PlotError(
            f"no plottable values in column {spec.resolved_y()!r} of {spec.source}"
        )

    figure = Figure(figsize=(7.0, 4.5))
    axes = figure.subplots()
    for name, points in groups.items():
        xs = [point[0] for point in points]
        ys = [point[1] for point in points]
        axes.plot(xs, ys, marker="o", markersize=4, label=name)
    if bound:
        xs = [point[0] for point in bound]
        ys = [point[1] for point in bound]
        axes.plot(xs, ys, label=spec.converse_column, **BOUND_STYLE)

    axes.set_xlabel(spec.x_column)
    axes.set_ylabel(spec.resolved_y())
    if spec.title:
        axes.set_title(spec.title)
    axes.grid(True, alpha=0.3)
    axes.legend()
    figure.tight_layout()
    figure.savefig(spec.output, dpi=150)
    return figure


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cachingplots",
        description="Render a sweep CSV as a line chart, one series per scheme.",
    )
    parser.add_argument("csv_path", help="sweep CSV to read")
    parser.add_argument("image_path", help="image file to write (.png, .pdf, .svg)")
    parser.add_argument("--x-column", default="sweep_value")
    parser.add_argument("--series-column", default="scheme")
    parser.add_argument(
        "--y-column",
        default="exact",
        help="column to plot: exact, smoothed, simulated, or converse",
    )
    parser.add_argument(
        "--converse-column",
        default="converse",
        help="column drawn as the dashed bound series",
    )
    parser.add_argument(
        "--no-converse",
        action="store_true",
        help="leave the dashed bound series off the chart",
    )
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)

    spec = PlotSpec(
        source=args.csv_path,
        output=args.image_path,
        x_column=args.x_column,
        series_column=args.series_column,
        y_column=args.y_column,
        converse_column=None if args.no_converse else args.converse_column,
        title=args.title,
    )
    try:
        render(spec)
    except PlotError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"plot error: cannot write {spec.output}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
