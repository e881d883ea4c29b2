"""Backend selection for the hot loops.

The compiled module is used when it imports; set ``XWALK_PURE=1`` to force
the pure-Python twin.  Both expose the same functions.
"""
import importlib
import logging
import os

log = logging.getLogger(__name__)


def load(name=None):
    """Return a kernel module: ``"cython"``, ``"python"`` or None for auto."""
    if name == "python":
        return importlib.import_module("xwalk._pykernels")
    if name == "cython":
        return importlib.import_module("xwalk._ckernels")
    if name is not None:
        raise ValueError(f"unknown kernel backend {name!r}")
    if os.environ.get("XWALK_PURE"):
        return load("python")
    try:
        return load("cython")
    except ImportError:
        log.debug("compiled kernels unavailable, using pure Python")
        return load("python")


def available():
    names = ["python"]
    try:
        load("cython")
        names.append("cython")
    except ImportError:
        pass
    return names


active = load()
BACKEND = active.BACKEND
