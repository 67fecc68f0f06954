"""Discrete twisted Dolbeault and Dirac operators on flat tori."""

from ._core import *  # noqa: F401,F403
from ._core import ValidationError, run


def run_cli(command, **flags):
    """Run a CLI command with keyword flags (underscores become dashes)."""
    kv = {"command": command}
    for key, value in flags.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        kv[key.replace("_", "-")] = str(value)
    return run(kv)
