def get_tasks(parsed, cfg):
    from ..tasks.indicator import IndicatorGridTask
    from ..tasks.plotdata import PlotData

    if cfg.indicator is None:
        raise ValueError("config %s has no indicator section" % cfg.name)
    tasks = [IndicatorGridTask(cfg, pair) for pair in cfg.indicator.pairs]
    if cfg.indicator.figure:
        tasks.append(PlotData(cfg.indicator.figure, sources=list(tasks), name="plot_" + cfg.indicator.figure))
    return tasks
