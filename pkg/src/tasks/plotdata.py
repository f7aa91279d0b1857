"""Projection of result CSVs into per-figure data files.

Each figure reads one kind of result CSV and keeps a fixed column list. The
``.dat`` files are tab separated with a header row; given several CSVs, a
leading ``series`` column holds the 0-based input index.
"""
import os

import numpy as np
import pandas

from ..engine.nonclassicality import IndicatorGrid
from ..shared import config
from ..shared.didyoumean import suggest
from ..shared.utils import unique_path
from .task_base import Task

FIGURES = {
    "fig1b": ("dispersion", ["kpar_per_nm", "omega_branch1_meV", "omega_branch2_meV"]),
    "fig1d": ("flux_sweep", ["omega_meV", "phi_q", "phi_t", "upsilon"]),
    "fig1e": ("spectrum", ["omega_meV", "minus_F_body1_l-1"]),
    "fig2b": ("flux_sweep", ["gap_nm", "omega_meV", "phi_q"]),
    "fig2c": ("flux_sweep", ["gap_nm", "omega_meV", "phi_t", "upsilon"]),
    "fig2d": ("flux_sweep", ["gap_nm", "temperature_K", "phi_q", "phi_t", "upsilon"]),
    "fig2e": ("flux_sweep", ["gap_nm", "temperature_K", "phi_q", "phi_t", "upsilon"]),
    "fig3a": ("indicator_grid", ["kind", "z_nm", "T_K", "indicator_normalized"]),
    "fig3b": ("indicator_grid", ["kind", "z_nm", "T_K", "indicator_normalized"]),
    "fig3c": ("indicator_grid", ["kind", "z_nm", "T_K", "indicator_normalized"]),
    "fig3d": ("flux_sweep", ["omega_meV", "phi_q", "phi_q_order1", "phi_q_order2", "phi_q_order3"]),
    "fig3e": ("flux_sweep", ["omega_meV", "temperature_K", "dominance"]),
}

# derived columns: name -> (required source columns, function of the frame)
DERIVED = {
    "omega_meV": (("mod_freq_meV",), lambda df: df["mod_freq_meV"]),
    "minus_F_body1_l-1": (("F_body1_l-1",), lambda df: -df["F_body1_l-1"]),
}


def _indicator_frame(df):
    z_grid = np.unique(df["z_nm"].to_numpy())
    T_grid = np.unique(df["T_K"].to_numpy())
    values = (
        df.pivot(index="z_nm", columns="T_K", values="indicator_normalized")
        .reindex(index=z_grid, columns=T_grid)
        .to_numpy()
    )
    grid = IndicatorGrid(z_grid, T_grid, values)
    contour = [
        {"kind": "contour", "z_nm": z, "T_K": T, "indicator_normalized": 0.0}
        for z, T in grid.zero_contour()
        if T is not None
    ]
    cells = df.assign(kind="grid")
    return pandas.concat([cells, pandas.DataFrame(contour, columns=cells.columns)], ignore_index=True)


def _project(df, figure, columns):
    kind = FIGURES[figure][0]
    if kind == "indicator_grid":
        missing = [c for c in ("z_nm", "T_K", "indicator_normalized") if c not in df.columns]
        if not missing:
            df = _indicator_frame(df)
    else:
        missing = []
        df = df.copy()
        for column in columns:
            if column in df.columns:
                continue
            if column in DERIVED and all(c in df.columns for c in DERIVED[column][0]):
                df[column] = DERIVED[column][1](df)
            else:
                missing.append(column)
    if missing:
        raise ValueError("%s needs columns %s missing from the input" % (figure, missing))
    return df[columns]


def emit_plot_data(csv_paths, figure, out=None):
    """Write ``<figure>.dat`` from one or more result CSVs; returns the path written."""
    if isinstance(csv_paths, str):
        csv_paths = [csv_paths]
    if figure not in FIGURES:
        raise ValueError("unknown figure %r. Did you mean %s ?" % (figure, suggest(figure, sorted(FIGURES))))
    if not csv_paths:
        raise ValueError("no input CSV for %s" % figure)
    columns = FIGURES[figure][1]
    frames = []
    for series, path in enumerate(csv_paths):
        df = pandas.read_csv(path)
        if df.empty:
            raise ValueError("%s is empty, nothing to plot" % path)
        df = _project(df, figure, columns)
        if len(csv_paths) > 1:
            df.insert(0, "series", series)
        frames.append(df)
    data = pandas.concat(frames, ignore_index=True)
    if out is None:
        out = unique_path(os.path.join(os.path.dirname(os.path.abspath(csv_paths[0])), "%s.dat" % figure))
    data.to_csv(out, sep="\t", index=False, float_format=config.CSV_FLOAT_FORMAT)
    return out


class PlotData(Task):
    """Emit one figure file from CSVs given directly or written by earlier tasks."""

    def __init__(self, figure, csv_paths=(), sources=(), out=None, **kwargs):
        kwargs.setdefault("name", figure)
        super().__init__(**kwargs)
        self.figure = figure
        self.csv_paths = list(csv_paths)
        self.sources = list(sources)
        self.out = out

    def _inputs(self):
        paths = list(self.csv_paths)
        kind = FIGURES.get(self.figure, ("",))[0]
        for task in self.sources:
            paths += [f for f in task.files if os.path.basename(f).startswith(kind)]
        return paths

    def _run(self):
        out = self.out or self._generate_unique_filename(self.figure, "dat")
        self.files.append(emit_plot_data(self._inputs(), self.figure, out=out))
        yield None

    def _save(self):
        return False
