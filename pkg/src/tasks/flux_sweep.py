"""Flux sweeps: one spectral table per point, one result row per (point, temperature)."""
import os

import numpy as np

from ..engine.flux import flux_breakdown, quantum_weights, spectral_flux_table
from ..shared import logs
from .task_base import Task

PARAM_COLUMNS = {
    "mod_freq": "mod_freq_meV",
    "gap": "gap_nm",
    "delta_eps": "delta_eps",
    "temperature": "temperature_K",
}
ORDERS_REPORTED = 3


def point_parameters(cfg, sweep, value):
    """Every stack parameter at one sweep point: config default, then fixed, then swept."""
    params = {
        "mod_freq": cfg.mod_freq,
        "gap": cfg.stack.gap,
        "delta_eps": cfg.delta_eps,
        "temperature": cfg.temperature,
    }
    params.update(dict(sweep.fixed))
    params[sweep.variable] = float(value)
    return params


def point_stack(cfg, params):
    return cfg.stack.with_gap(params["gap"]).with_modulation(
        mod_freq=params["mod_freq"], delta_eps=params["delta_eps"]
    )


def _rel_change(a, b):
    changes = [abs(x - y) / abs(y) for x, y in zip(a, b) if y != 0]
    return max(changes) if changes else 0.0


class FluxSweep(Task):

    CSV_NAME = "flux_sweep"

    def __init__(self, cfg, sweep_name, check_convergence=False, **kwargs):
        kwargs.setdefault("name", sweep_name)
        super().__init__(**kwargs)
        self.cfg = cfg
        self.sweep = cfg.sweep(sweep_name)
        if self.sweep.variable == "z_height":
            raise ValueError(
                "sweep %r varies z_height, which only applies to the indicator verb" % sweep_name
            )
        self.check_convergence = check_convergence
        self.grid = self.sweep.grid()
        self.columns = self._columns()

    def _temperatures(self, params):
        if self.sweep.variable == "temperature":
            return (params["temperature"],)
        return self.sweep.temperatures or (params["temperature"],)

    @property
    def duration(self):
        if self.sweep.variable == "temperature":
            return len(self.grid)
        return len(self.grid) * max(1, len(self.sweep.temperatures))

    def _columns(self):
        swept = PARAM_COLUMNS[self.sweep.variable]
        columns = [swept] + [c for c in PARAM_COLUMNS.values() if c != swept]
        columns += ["phi_q", "phi_t", "upsilon", "q_net", "dominance", "error", "converged"]
        columns += ["phi_q_order%d" % o for o in range(1, ORDERS_REPORTED + 1)]
        if self.sweep.spectra:
            columns.append("spectra_file")
        if self.check_convergence:
            columns.append("max_rel_change_nh")
        return columns

    def _table(self, params, trunc=None):
        basis = self.cfg.basis(mod_freq=params["mod_freq"], trunc=trunc)
        stack = point_stack(self.cfg, params)
        return spectral_flux_table(stack, basis, self.cfg.quadrature, mapper=self.mapper)

    def _tables(self, params):
        table = self._table(params)
        self._flag(table.converged, "spectral table at %s=%g" % (self.sweep.variable, params[self.sweep.variable]))
        refined = self._table(params, self.cfg.truncation + 1) if self.check_convergence else None
        return table, refined

    def _row(self, params, T, table, spectra_file=None, refined=None):
        breakdown = flux_breakdown(table, T)
        row = {PARAM_COLUMNS[k]: float(v) for k, v in params.items()}
        row.update({
            "temperature_K": float(T),
            "phi_q": breakdown.phi_q,
            "phi_t": breakdown.phi_t,
            "upsilon": breakdown.upsilon,
            "q_net": breakdown.q_net,
            "dominance": breakdown.dominance,
            "error": breakdown.error,
            "converged": bool(breakdown.converged),
        })
        for order in range(1, ORDERS_REPORTED + 1):
            row["phi_q_order%d" % order] = breakdown.phi_q_by_order.get(order, 0.0)
        if self.sweep.spectra:
            row["spectra_file"] = spectra_file
        if refined is not None:
            fine = flux_breakdown(refined, T)
            row["max_rel_change_nh"] = _rel_change(
                (breakdown.phi_q, breakdown.phi_t, breakdown.upsilon),
                (fine.phi_q, fine.phi_t, fine.upsilon),
            )
        return row

    def _spectra(self, index, table):
        rows = {"omega_meV": table.omega}
        for l in table.orders:
            rows["F_body1_l%d" % l] = table.spectrum(1, int(l))
            rows["F_body2_l%d" % l] = table.spectrum(2, int(l))
        # per-energy integrand of the quantum flux received by body 1
        quantum = quantum_weights(table) * table.values[:, 0].sum(axis=1)
        rows["quantum_integrand_body1"] = quantum.sum(axis=1)
        path = self.write_csv(rows, "spectrum_%03d" % index, columns=list(rows))
        return os.path.basename(path)

    def _run(self):
        variable = self.sweep.variable
        if variable == "temperature":
            # the spectra do not depend on temperature: one table for the whole sweep
            base = point_parameters(self.cfg, self.sweep, self.grid[0])
            table, refined = self._tables(base)
            spectra = self._spectra(0, table) if self.sweep.spectra else None
            for T in self.grid:
                yield self._row(point_parameters(self.cfg, self.sweep, T), T, table, spectra, refined)
            return

        for index, value in enumerate(self.grid):
            params = point_parameters(self.cfg, self.sweep, value)
            table, refined = self._tables(params)
            spectra = self._spectra(index, table) if self.sweep.spectra else None
            for T in self._temperatures(params):
                yield self._row(params, T, table, spectra, refined)
            logs.logger.info("%s: %s=%g done", self.name, variable, value)


def peak_positions(values, grid):
    """Grid positions of interior local maxima."""
    values = np.asarray(values)
    inner = (values[1:-1] > values[:-2]) & (values[1:-1] > values[2:])
    return np.asarray(grid)[1:-1][inner]
