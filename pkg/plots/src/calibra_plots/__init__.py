"""Read-only plotting companions for calibra run outputs.

These scripts consume the documented CSV/JSON files only; they never import
the engine and never recompute scores differently from the run itself (the
reliability diagram re-derives its bins from the raw forecast/action columns
alone).
"""

__version__ = "0.1.0"
