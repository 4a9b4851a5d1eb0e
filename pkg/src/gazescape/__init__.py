"""Gaze-steered generative landscape engine.

Spectator gaze accumulates into an attention field; lingering regions fire
feathered inpainting masks that a generation backend transforms with
climate-emergency prompts, composited strictly inside the mask. Absence
regenerates a fresh landscape. Everything is deterministic from (config,
session seed, gaze log), so live sessions replay bit-exactly.
"""

__version__ = "0.1.0"

from ._kernels import ACTIVE as kernel_backend  # noqa: F401
from .config import SessionConfig, config_from_dict, load_config  # noqa: F401
from .engine import Engine  # noqa: F401
from .gaze import GazeSample, parse_sample  # noqa: F401
from .generation import ProceduralBackend, NetworkBackend  # noqa: F401
from .replay import run_replay  # noqa: F401
