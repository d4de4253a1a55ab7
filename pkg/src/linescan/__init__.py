"""Invoice field extraction from positional text, trained on validated invoices."""

__version__ = "0.1.0"

from .model import Document, FieldType, Invoice, LabeledPair, NGram, Word

__all__ = [
    "Document",
    "FieldType",
    "Invoice",
    "LabeledPair",
    "NGram",
    "Word",
    "__version__",
]
