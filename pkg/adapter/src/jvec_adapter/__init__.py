"""jvec_adapter: batch-embed text and export JVEC vector files."""

__version__ = "0.1.0"

from .core import AdapterError, AdapterJob, embed_file, embed_labels  # noqa: F401
from .jvec import write_jvec  # noqa: F401
