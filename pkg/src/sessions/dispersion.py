def get_tasks(parsed, cfg):
    from ..tasks.dispersion import GapDispersion
    from ..tasks.plotdata import PlotData

    task = GapDispersion(cfg)
    tasks = [task]
    if cfg.dispersion.figure:
        tasks.append(PlotData(cfg.dispersion.figure, sources=[task], name="plot_" + cfg.dispersion.figure))
    return tasks
