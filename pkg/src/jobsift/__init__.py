"""jobsift: deterministic feature extraction and aggregation for job-ad text."""

__version__ = "0.1.0"

from . import (  # noqa: F401
    aggregate,
    corpus,
    embed_store,
    firm_match,
    job_tag,
    knowledge_map,
    months,
    stage_pipeline,
    title_match,
    validate,
    wage_extract,
)
