"""Gradient feature extraction from causal language models.

Produces GFS1 feature files (projected per-sample response-averaged loss
gradients plus scalar metadata) consumable by the scoring toolkit.
"""

from .extract import SampleRecord, extract, extract_scalars, load_samples_jsonl
from .model import ToyCausalLM, load_model, save_model, tokenize
from .projection import ProjectionSpec, entry, project_blocks, sign_block

__all__ = [
    "ProjectionSpec",
    "SampleRecord",
    "ToyCausalLM",
    "entry",
    "extract",
    "extract_scalars",
    "load_model",
    "load_samples_jsonl",
    "project_blocks",
    "save_model",
    "sign_block",
    "tokenize",
]
