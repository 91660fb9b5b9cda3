"""AIR instruction-dataset pipeline: Python bindings over the C++ core.

The heavy lifting lives in the compiled ``_core`` extension; this package
adds a thin convenience layer (JSON decoding for the pipeline runner).
"""

import json as _json

from ._core import (  # noqa: F401
    Document,
    FilterConfig,
    __version__,
    add_constraint,
    constraint_type_labels,
    cosine_similarity,
    count_requirement_lines,
    density_sample,
    ingest,
    length_filter,
    local_hash_embedding,
    parse_tagged_field,
    redundancy_filter,
    run_filters,
    symbol_ratio_filter,
    unique_trigrams,
    unit_normalize,
    validate_config,
    word_count,
)
from ._core import run_pipeline as _run_pipeline_raw


def run_pipeline(config_path, workers=0, dry_run=False, resume=True):
    """Run the full pipeline from a config file; returns a summary dict."""
    return _json.loads(
        _run_pipeline_raw(str(config_path), workers=workers, dry_run=dry_run, resume=resume)
    )


__all__ = [
    "Document",
    "FilterConfig",
    "__version__",
    "add_constraint",
    "constraint_type_labels",
    "cosine_similarity",
    "count_requirement_lines",
    "density_sample",
    "ingest",
    "length_filter",
    "local_hash_embedding",
    "parse_tagged_field",
    "redundancy_filter",
    "run_filters",
    "run_pipeline",
    "symbol_ratio_filter",
    "unique_trigrams",
    "unit_normalize",
    "validate_config",
    "word_count",
]
