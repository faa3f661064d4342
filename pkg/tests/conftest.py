import os
import sys

# Allow running the suite from a source checkout: prefer an installed
# package, fall back to src/ (the compiled extension, if built in place,
# lives there too).
try:
    import seq2seq  # noqa: F401
except ImportError:
    sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
