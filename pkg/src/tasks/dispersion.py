import numpy as np

from ..engine.stack import gap_mode_dispersion
from .task_base import Task


class GapDispersion(Task):
    """Gap surface-mode branches over the configured wavenumber range."""

    CSV_NAME = "dispersion"
    columns = ["kpar_per_nm", "omega_branch1_meV", "omega_branch2_meV"]

    def __init__(self, cfg, **kwargs):
        kwargs.setdefault("name", "dispersion")
        super().__init__(**kwargs)
        if cfg.dispersion is None:
            raise ValueError("config %s has no dispersion section" % cfg.name)
        self.cfg = cfg
        self.grid = cfg.dispersion.kpar.grid()
        self.duration = len(self.grid)

    def _run(self):
        # one k per call so progress advances per row
        for k in self.grid:
            roots = gap_mode_dispersion(self.cfg.stack, [k], layered=self.cfg.dispersion.layered)[0]
            if len(roots) > 2:
                self._flag(False, "branch count (%d roots at k=%g)" % (len(roots), k))
            padded = (roots + [np.nan, np.nan])[:2]
            yield {
                "kpar_per_nm": float(k),
                "omega_branch1_meV": padded[0],
                "omega_branch2_meV": padded[1],
            }
