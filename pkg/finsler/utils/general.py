# General utils

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd
import yaml

# Settings
np.set_printoptions(linewidth=320, formatter={'float_kind': '{:11.5g}'.format})  # format short g, %precision=5
pd.options.display.max_columns = 10
pd.options.display.width = 200

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def set_logging(level: Union[str, int] = "INFO", log_file: Optional[Path] = None):
    # Reports go to stdout, so logs stay on stderr (and an optional file)
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file is not None:
        handlers.append(logging.FileHandler(log_file))
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)
    logging.basicConfig(format=LOG_FORMAT, level=level, handlers=handlers, force=True)


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Load a run configuration from .json, .yaml or .yml"""
    path = Path(path)
    with open(path, 'r') as f:
        if path.suffix.lower() in ('.yaml', '.yml'):
            data = yaml.safe_load(f)
        else:
            data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at the top level")
    return data


def parse_point(text: str):
    """'0.5,0,0,1,0,0' -> [0.5, 0.0, 0.0, 1.0, 0.0, 0.0]"""
    try:
        return [float(v) for v in text.replace(' ', '').split(',') if v]
    except ValueError:
        raise ValueError(f"point '{text}' is not a comma-separated list of numbers") from None
