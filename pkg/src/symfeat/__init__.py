"""Symbolic music feature extraction: parsers, feature catalogue, caching, tables, evaluation."""

from .engine import ExtractionConfig, FeatureRow, extract, extract_windowed, list_features
from .parsers import PARSER_VERSION, ParseError, parse_bytes
from .score import Score
from .table import FeatureTable, read_csv, write_csv

__version__ = "0.1.0"

__all__ = [
    "ExtractionConfig", "FeatureRow", "FeatureTable", "PARSER_VERSION", "ParseError", "Score",
    "extract", "extract_windowed", "list_features", "parse_bytes", "read_csv", "write_csv",
]
