"""Kernel backend selection.

Prefers the compiled extension and falls back to the interpreted kernels
when it is not importable.  Both expose the same functions and produce
bit-identical output; only speed differs.
"""

try:
    from . import _kernels as _impl
except ImportError:
    from . import _purepy as _impl

backend = _impl


def backend_name() -> str:
    """Name of the active kernel backend: 'cython' or 'pure-python'."""
    return _impl.BACKEND_NAME


def load_backend(name: str):
    """Import a specific backend module by name, for benchmarks and tests.

    Raises ImportError if the compiled backend was not built.
    """
    if name == "cython":
        from . import _kernels

        return _kernels
    if name == "pure-python":
        from . import _purepy

        return _purepy
    raise ValueError("unknown backend %r" % (name,))
