from ..shared import cli


def sweep_tasks(cfg, names=None, check_convergence=False):
    from ..tasks.flux_sweep import FluxSweep
    from ..tasks.plotdata import PlotData

    names = names or list(cfg.sweeps)
    if not names:
        raise ValueError("config %s defines no sweeps" % cfg.name)
    tasks = [FluxSweep(cfg, name, check_convergence=check_convergence) for name in names]

    # one figure file per figure name, fed by every sweep that declares it
    figures = {}
    for task in tasks:
        if task.sweep.figure:
            figures.setdefault(task.sweep.figure, []).append(task)
    tasks += [PlotData(figure, sources=sources, name="plot_" + figure) for figure, sources in figures.items()]
    return tasks


def get_tasks(parsed, cfg):
    return sweep_tasks(cfg, parsed.sweep, parsed.check_convergence)


def run_sweep(cfg, names=None, out=None, workers=1, check_convergence=False, show_progress=True):
    """Run the named sweeps of ``cfg`` (all by default); returns the exit code."""
    return cli.main_loop(
        sweep_tasks(cfg, names, check_convergence),
        cfg.name,
        cfg.raw,
        out or cfg.output_dir,
        workers=workers,
        show_progress=show_progress,
    )
