import os

import pandas
import tqdm

from ..shared import config, logs
from ..shared.utils import unique_path


class Task(object):
    """One unit of a run: setup, a generator of result rows, then save.

    ``_run`` yields one row (a dict) per computed point; rows are collected in
    order and written by ``save`` unless ``_save`` handles the output itself.
    """

    PROGRESS_BAR_FORMAT = "{l_bar}{bar}{r_bar}"
    CSV_NAME = "results"

    def __init__(self, name):
        self.name = name
        self.converged = True
        self.files = []

    def setup(self, output_path, mapper=map, show_progress=True):
        self.output_path = os.path.join(output_path, self.name)
        os.makedirs(self.output_path, exist_ok=True)
        self.mapper = mapper
        self._rows = []
        self._setup()
        # initialize a progress bar if we know the number of points
        self.progress_bar = (
            tqdm.tqdm(total=self.duration, bar_format=self.PROGRESS_BAR_FORMAT, desc=self.name)
            if show_progress and hasattr(self, "duration")
            else False
        )

    def _setup(self):
        pass

    def _generate_unique_filename(self, stem, ext="csv"):
        return unique_path(os.path.join(self.output_path, "%s.%s" % (stem, ext)))

    def __str__(self):
        return "%s : %s" % (self.__class__.__name__, self.name)

    def run(self):
        for row in self._run():
            if row is not None:
                self._rows.append(row)
            if self.progress_bar:
                self.progress_bar.update(1)
            yield row

    def _run(self):
        return iter(())

    def stop(self):
        if self.progress_bar:
            self.progress_bar.close()

    def _flag(self, converged, what):
        if not converged:
            self.converged = False
            logs.logger.warning("task - %s: %s not converged", self.name, what)

    def write_csv(self, rows, stem, columns=None):
        """Write rows with a fixed column order; returns the path written."""
        fname = self._generate_unique_filename(stem, "csv")
        df = pandas.DataFrame(rows, columns=columns)
        df.to_csv(fname, index=False, float_format=config.CSV_FLOAT_FORMAT)
        self.files.append(fname)
        return fname

    def _save(self):
        # to be overriden
        # return False if rows need not be saved
        pass

    def save(self):
        save_rows = self._save()
        if save_rows is None and len(self._rows):
            self.write_csv(self._rows, self.CSV_NAME, columns=getattr(self, "columns", None))

    def summary(self):
        return {
            "name": self.name,
            "task": self.__class__.__name__,
            "converged": self.converged,
            "rows": len(self._rows),
            "files": list(self.files),
        }
