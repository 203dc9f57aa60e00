"""Hot base-case kernels: compiled core with a pure-NumPy fallback.

The backend is selected once at import time: the Cython extension when it
is importable, the NumPy implementation otherwise.  Set GRAMKIT_KERNELS=py
(or =c) to force one.  Both backends accumulate products strictly in inner
index order and the extension is built with FP contraction disabled, so
their results are bitwise identical.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

gram_block = None
matmul_block = None
transpose_tile = None
_active = None


def available_backends():
    return ("c", "py") if _ckernels is not None else ("py",)


def backend_name():
    """Name of the backend currently bound: 'c' or 'py'."""
    return _active


def use_backend(name="auto"):
    """Bind the kernel entry points to one backend ('auto', 'c' or 'py').

    Not safe to call while other threads or workers are computing.
    """
    global gram_block, matmul_block, transpose_tile, _active
    if name == "auto":
        mod = _ckernels if _ckernels is not None else _pykernels
    elif name == "c":
        if _ckernels is None:
            raise ValueError("compiled kernel extension is not available")
        mod = _ckernels
    elif name == "py":
        mod = _pykernels
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    gram_block = mod.gram_block
    matmul_block = mod.matmul_block
    transpose_tile = mod.transpose_tile
    _active = "c" if mod is _ckernels else "py"
    return _active


use_backend(os.environ.get("GRAMKIT_KERNELS", "auto"))
