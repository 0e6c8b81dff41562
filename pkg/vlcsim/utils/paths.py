"""Where vlcsim writes logs and results."""
import os
import pathlib
from typing import Optional

# overrides the per-user state directory, e.g. on shared clusters
STATE_DIR_ENV = "VLCSIM_HOME"


def get_state_dir_path() -> str:
    override = os.environ.get(STATE_DIR_ENV)
    if override:
        return str(pathlib.Path(override).expanduser().absolute())
    return str(pathlib.Path.home().absolute() / ".vlcsim")


def get_logging_dir_path() -> str:
    return os.path.join(get_state_dir_path(), "logs")


def ensure_dir(path: Optional[str]) -> Optional[str]:
    """create `path` (and parents) if missing and return it unchanged."""
    if path:
        os.makedirs(path, exist_ok=True)
    return path
