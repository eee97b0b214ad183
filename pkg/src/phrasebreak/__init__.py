"""Phrase-break assessment for second-language speech."""

__version__ = "0.1.0"
