"""Semantic preprocessing of PE files into JSON reports."""

import json
import os

from ._pesem import (
    PesemError,
    aggregate_packing_label,
    analyze_bytes,
    analyze_file,
    categories,
    classification_metrics,
    compute_imphash,
    count_tokens,
    fit_report,
    render_metrics_table,
    report_schema_version,
    shannon_entropy,
    stratified_split,
    validate_rule_pack,
)

__all__ = [
    "PesemError",
    "aggregate_packing_label",
    "analyze",
    "analyze_bytes",
    "analyze_file",
    "categories",
    "classification_metrics",
    "compute_imphash",
    "count_tokens",
    "fit_report",
    "metrics",
    "render_metrics_table",
    "report_schema_version",
    "shannon_entropy",
    "stratified_split",
    "validate_rule_pack",
]


def analyze(source, file_name=None, budget=None, rule_pack=None, packed_threshold=None):
    """Report of a PE file (path) or image (bytes), as a dict."""
    if isinstance(source, (bytes, bytearray, memoryview)):
        text = analyze_bytes(bytes(source), file_name or "sample.exe", budget, rule_pack, packed_threshold)
    else:
        text = analyze_file(os.fspath(source), budget, rule_pack, packed_threshold)
    return json.loads(text)


def metrics(predictions, labels, class_names=None):
    """Classification metrics as a dict; labels index into class_names."""
    names = list(class_names) if class_names is not None else list(categories)
    return json.loads(classification_metrics(list(predictions), list(labels), names))
