"""Select the compiled kernels when available, else the numpy fallback.

Set ``POROUS_SOC_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("POROUS_SOC_PURE_PYTHON", "") not in ("", "0"):
    from ._fallback import hm1_sq, newton_solve, phi, phi_inv

    BACKEND = "python"
else:
    try:
        from ._kernels import hm1_sq, newton_solve, phi, phi_inv

        BACKEND = "cython"
    except ImportError:
        from ._fallback import hm1_sq, newton_solve, phi, phi_inv

        BACKEND = "python"

__all__ = ["BACKEND", "hm1_sq", "newton_solve", "phi", "phi_inv"]
