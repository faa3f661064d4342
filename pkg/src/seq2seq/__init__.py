"""Deep LSTM encoder-decoder sequence learning engine.

Training with SGD + gradient-norm clipping, source reversal, beam-search
decoding with ensembles, n-best rescoring, BLEU/perplexity evaluation and
hidden-state PCA analysis, all on a small deterministic numeric core with a
compiled fast path and a pure-Python fallback.
"""

from .backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
