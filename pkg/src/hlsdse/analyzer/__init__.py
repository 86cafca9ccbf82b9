"""Front end for restricted C kernels: parsing and structural extraction."""

from .extract import (
    UNKNOWN,
    ArrayInfo,
    BoundDirective,
    FunctionInfo,
    KernelInfo,
    LoopInfo,
    analyze,
    const_eval,
    extract_info,
    infer_trip_count,
    parse_pragma_text,
)
from .lexer import Location, tokenize
from .parser import call_graph, parse_source
from .printer import pretty_print
from .source import SourceFile, SourceUnit, count_hls_pragmas

__all__ = [
    "UNKNOWN", "ArrayInfo", "BoundDirective", "FunctionInfo", "KernelInfo", "LoopInfo",
    "Location", "SourceFile", "SourceUnit", "analyze", "call_graph", "const_eval",
    "count_hls_pragmas", "extract_info", "infer_trip_count", "parse_pragma_text",
    "parse_source", "pretty_print", "tokenize",
]
