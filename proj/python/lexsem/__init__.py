"""Joint statute and precedent retrieval pipeline."""

try:
    from ._lexsem import *  # noqa: F401,F403  (installed package layout)
except ImportError:
    from _lexsem import *  # noqa: F401,F403  (build-tree layout via PYTHONPATH)
