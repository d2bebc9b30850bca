"""Cash-flow data mining pipeline.

Flat-file ERP extracts flow through staging (editable landing area, then an
activated store with overwrite-by-key semantics) into a star-schema cube,
where analysis processes run clustering, decision-tree and regression
models and deploy results as flat files, charts and report feeds.
"""

from .workspace import DEFAULT_SEED, Workspace

__version__ = "1.0.0"

__all__ = ["DEFAULT_SEED", "Workspace", "__version__"]
