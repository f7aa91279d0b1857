import os
from textdistance import jaro

from . import config


def suggest(query, candidates):
    candidates = list(candidates)
    if not candidates:
        return None
    return max(candidates, key=lambda x: jaro(x, query))


def suggest_recipe(query):
    avail = [f.replace(".json", "") for f in os.listdir(config.RECIPES_DIR) if f.endswith(".json")]
    return suggest(query, sorted(avail))
