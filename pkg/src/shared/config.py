from dotenv import load_dotenv
load_dotenv()

import os

OUTPUT_DIR = "output"

RECIPES_DIR = os.path.join("data", "recipes")
DEFAULT_RECIPE = "default"

# number of worker processes; unset means all logical CPUs, 1 disables the pool
WORKERS_ENV = "DCE_WORKERS"

CSV_FLOAT_FORMAT = "%.10e"

LOG_LEVEL = os.environ.get("DCE_LOG_LEVEL", "INFO")

# default truncation of the harmonic basis
TRUNCATION = 3

MANIFEST_NAME = "run_manifest.json"

# exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_NOT_CONVERGED = 2
EXIT_ABORTED = 130
