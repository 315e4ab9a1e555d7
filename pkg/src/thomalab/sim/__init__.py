"""Monte Carlo for the truncated natural-coordinate diffusion.

The path kernel comes from the compiled extension when it is built, else from
the pure-Python fallback. ``THOMA_SIM_BACKEND=python`` forces the fallback.
"""

import os

from . import _kernel_py


def _select():
    if os.environ.get("THOMA_SIM_BACKEND", "").lower() == "python":
        return _kernel_py
    try:
        from . import _kernel
    except ImportError:
        return _kernel_py
    return _kernel


kernel = _select()
BACKEND = kernel.BACKEND

from .core import (  # noqa: E402
    SimConfig, SimError, SimResult, SimState, diffusion_matrix, drift_nat,
    generator_consistency, omega0_report, read_binary, simulate, step,
    write_binary, write_csv,
)

__all__ = [
    "BACKEND", "SimConfig", "SimError", "SimResult", "SimState", "diffusion_matrix",
    "drift_nat", "generator_consistency", "kernel", "omega0_report", "read_binary",
    "simulate", "step", "write_binary", "write_csv",
]
