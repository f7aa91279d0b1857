import hashlib
import json
import os
from concurrent import futures
from contextlib import contextmanager

import psutil

from . import config


def worker_count(override=None):
    if override:
        return max(1, int(override))
    value = os.environ.get(config.WORKERS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise ValueError("%s must be an integer, got %r" % (config.WORKERS_ENV, value))
    return psutil.cpu_count(logical=True) or 1


@contextmanager
def ordered_mapper(workers):
    """Yield a map-like callable; results always come back in input order."""
    if workers <= 1:
        yield map
        return
    with futures.ProcessPoolExecutor(max_workers=workers) as executor:

        def mapper(fn, items):
            items = list(items)
            chunk = max(1, len(items) // (4 * workers))
            return executor.map(fn, items, chunksize=chunk)

        yield mapper


def config_hash(payload):
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha1(canonical.encode("utf-8")).hexdigest()


def unique_path(path):
    """``path`` or the first free ``stem-001.ext`` style variant of it."""
    if not os.path.exists(path):
        return path
    stem, ext = os.path.splitext(path)
    fi = 1
    while os.path.exists("%s-%03d%s" % (stem, fi, ext)):
        fi += 1
    return "%s-%03d%s" % (stem, fi, ext)
