# CLI: main loop running the tasks of one invocation

import datetime
import json
import logging
import os
import time
import traceback

from . import config, logs
from .utils import config_hash, ordered_mapper, unique_path
from ..engine import __version__


def run_task(task, run_path, mapper, show_progress=True):
    print("Next task: %s" % str(task))
    task.setup(run_path, mapper=mapper, show_progress=show_progress)
    try:
        for _ in task.run():
            pass
    finally:
        task.stop()
        # partial rows are kept when the run is interrupted
        task.save()


def _relative(files, run_path):
    return [os.path.relpath(f, run_path) for f in files]


def main_loop(all_tasks, name, payload, output_dir, workers=1, show_progress=True):
    """Run ``all_tasks`` in a fresh run directory and return the exit code.

    The directory ``<output_dir>/<name>_<timestamp>`` receives the log file,
    the configuration used, every task's output and ``run_manifest.json``.
    """
    stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S")
    run_name = "%s_%s" % (name, stamp)
    run_path = unique_path(os.path.abspath(os.path.join(output_dir, run_name)))
    os.makedirs(run_path, exist_ok=True)
    log_file = logs.LogFile(os.path.join(run_path, run_name + ".log"), level=logging.INFO, filemode="w")
    if payload is not None:
        with open(os.path.join(run_path, "config.json"), "w") as fd:
            json.dump(payload, fd, indent=2)
            fd.write("\n")

    all_tasks = list(all_tasks)
    print("Here are the tasks planned for this run\n" + "_" * 50)
    for task in all_tasks:
        print(f"- {task.name} {getattr(task, 'duration', '')}")
    print("_" * 50)

    manifest = {
        "config": name,
        "config_hash": config_hash(payload) if payload is not None else None,
        "version": __version__,
        "start_time": datetime.datetime.now().isoformat(timespec="seconds"),
        "workers": workers,
        "status": "running",
        "tasks": [],
    }
    start = time.monotonic()
    exit_code = config.EXIT_OK
    try:
        with ordered_mapper(workers) as mapper:
            for task in all_tasks:
                run_task(task, run_path, mapper, show_progress)
                logs.exp("task - %s: complete", str(task))
                manifest["tasks"].append(task.summary())
        manifest["status"] = "complete"
    except KeyboardInterrupt:
        print(traceback.format_exc())
        logs.exp("user killing the program")
        print("you killing me!")
        manifest["status"] = "aborted"
    except Exception:
        logs.logger.exception("run %s failed", run_name)
        manifest["status"] = "failed"
        raise
    finally:
        done = {t["name"] for t in manifest["tasks"]}
        # tasks interrupted midway still report their partial files
        manifest["tasks"] += [t.summary() for t in all_tasks if t.name not in done and hasattr(t, "_rows")]
        for summary in manifest["tasks"]:
            summary["files"] = _relative(summary["files"], run_path)
        if not all(t["converged"] for t in manifest["tasks"]):
            exit_code = config.EXIT_NOT_CONVERGED
        manifest["wall_time_s"] = round(time.monotonic() - start, 3)
        manifest["exit_code"] = exit_code if manifest["status"] == "complete" else config.EXIT_ABORTED
        with open(os.path.join(run_path, config.MANIFEST_NAME), "w") as fd:
            json.dump(manifest, fd, indent=2)
            fd.write("\n")
        logs.close(log_file)
    print("results in %s" % run_path)
    return manifest["exit_code"]
