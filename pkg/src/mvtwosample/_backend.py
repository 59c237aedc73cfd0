"""Pick the compiled kernels when they were built, else the numpy fallback."""

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active = _compiled if _compiled is not None else _kernels_py


def available() -> list[str]:
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def kernels():
    """The module currently used for batch evaluation."""
    return _active


def name() -> str:
    return _active.BACKEND


def set_backend(backend: str) -> None:
    """Switch to ``"cython"`` or ``"python"`` for the rest of the process."""
    global _active
    if backend == "python":
        _active = _kernels_py
    elif backend == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {backend!r}")
