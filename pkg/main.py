#!/usr/bin/python3
import importlib
import sys

from src.shared import config, logs, parser
from src.shared.schema import ConfigError, load_config, with_overrides
from src.shared.utils import worker_count


def run(parsed):
    logs.setup_console(config.LOG_LEVEL)
    if parsed.verb == "plotdata":
        from src.tasks.plotdata import emit_plot_data

        print(emit_plot_data([parsed.csv], parsed.figure, out=parsed.out))
        return config.EXIT_OK

    cfg = load_config(parsed.config)
    if parsed.nh is not None:
        cfg = with_overrides(cfg, truncation=parsed.nh)

    verb_mod = importlib.import_module("src.sessions.%s" % parsed.verb)
    tasks = verb_mod.get_tasks(parsed, cfg)

    from src.shared import cli

    return cli.main_loop(
        tasks,
        cfg.name,
        cfg.raw,
        parsed.out or cfg.output_dir,
        workers=worker_count(parsed.workers),
    )


def run_profiled(parsed):
    import cProfile

    result = {}
    cProfile.runctx("result['code'] = run(parsed)", {"run": run, "parsed": parsed, "result": result}, {}, "dce.pstats")
    return result.get("code", config.EXIT_OK)


def main(argv=None):
    parsed = parser.parse_args(argv)
    try:
        return run_profiled(parsed) if parsed.profile else run(parsed)
    except ConfigError as err:
        print(err, file=sys.stderr)
        return config.EXIT_CONFIG_ERROR
    except ValueError as err:
        print("error: %s" % err, file=sys.stderr)
        return config.EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
