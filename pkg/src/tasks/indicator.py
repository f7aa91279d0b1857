import os

from ..engine.nonclassicality import QuadraturePairSpec, compute_indicator_grid
from ..shared import logs
from .task_base import Task


class IndicatorGridTask(Task):
    """I/N over the configured heights and temperatures for one quadrature pair."""

    CSV_NAME = "indicator_grid"
    columns = ["z_nm", "T_K", "indicator_normalized"]

    def __init__(self, cfg, pair, **kwargs):
        kwargs.setdefault("name", pair.label)
        super().__init__(**kwargs)
        self.cfg = cfg
        self.pair = QuadraturePairSpec(pair.mod_freq, pair.delta_omega)
        self.stack = cfg.stack.with_modulation(mod_freq=pair.mod_freq)
        self.z_grid = cfg.indicator.z_nm.grid()
        self.T_grid = cfg.indicator.T_K.grid()
        self.duration = 1

    def _run(self):
        grid = compute_indicator_grid(
            self.stack,
            self.cfg.basis(mod_freq=self.pair.mod_energy),
            self.pair,
            self.z_grid,
            self.T_grid,
            self.cfg.quadrature,
            mapper=self.mapper,
        )
        self.grid = grid
        self._flag(grid.converged, "response overlaps")
        for z, T_zero in grid.zero_contour():
            if T_zero is not None:
                logs.logger.info("%s: I/N crosses zero at z=%g nm, T=%.1f K", self.name, z, T_zero)
        for z, T in grid.flagged:
            logs.logger.warning("%s: indicator falls with temperature at z=%g nm, T=%g K", self.name, z, T)
        self._rows.extend(grid.rows())
        yield None

    def _save(self):
        self.write_csv(self._rows, self.CSV_NAME, columns=self.columns)
        contour = [
            {"z_nm": z, "T_zero_K": T} for z, T in self.grid.zero_contour()
        ]
        self.write_csv(contour, "indicator_zero_contour", columns=["z_nm", "T_zero_K"])
        return False
