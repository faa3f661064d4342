"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the
pure-Python kernels take over.  ``SEQ2SEQ_BACKEND`` overrides the choice:
``c``/``compiled`` demands the extension (ImportError if missing),
``python``/``pure`` forces the fallback, anything else / unset is ``auto``.
"""

import os

_requested = os.environ.get("SEQ2SEQ_BACKEND", "auto").strip().lower()

if _requested in ("python", "py", "pure"):
    from . import _pykernels as kernels

    BACKEND = "python"
elif _requested in ("auto", "", "c", "compiled"):
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]

        BACKEND = "c"
    except ImportError:
        if _requested in ("c", "compiled"):
            raise ImportError(
                "SEQ2SEQ_BACKEND=c but the compiled kernel extension is not "
                "built; run `python setup.py build_ext --inplace`"
            )
        from . import _pykernels as kernels  # type: ignore[no-redef]

        BACKEND = "python"
else:
    raise ImportError(f"unknown SEQ2SEQ_BACKEND value: {_requested!r}")


def get_kernels(name):
    """Return a kernel module by name ('c' or 'python'); for benchmarks/tests."""
    if name == "python":
        from . import _pykernels

        return _pykernels
    if name == "c":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend name: {name!r}")
