"""Reward ensemble scoring, group advantage normalization and a toy GRPO simulator."""

import json as _json

from ._core import (
    ConfigError,
    ParsedResponse,
    ScoringError,
    ValidationError,
    classification_reward,
    cosine_similarity,
    evaluate_accuracy,
    format_reward,
    normalize,
    normalize_label,
    parse_judge_score,
    parse_tagged_response,
    render_prompt,
    render_tagged_response,
    score_group,
    substring_match,
    thinking_length_reward,
)
from . import _core

__all__ = [
    "ConfigError",
    "ParsedResponse",
    "ScoringError",
    "ValidationError",
    "advantage_diagnostics",
    "classification_reward",
    "cosine_similarity",
    "evaluate_accuracy",
    "format_reward",
    "grpo_normalize",
    "mrn_normalize",
    "normalize",
    "normalize_label",
    "parse_judge_score",
    "parse_tagged_response",
    "render_prompt",
    "render_tagged_response",
    "score_group",
    "simulate",
    "substring_match",
    "thinking_length_reward",
]


def grpo_normalize(rows, epsilon=1e-4, weights=()):
    return normalize(rows, "grpo", epsilon, list(weights))["values"]


def mrn_normalize(rows, epsilon=1e-4, weights=()):
    return normalize(rows, "mrn", epsilon, list(weights))["values"]


def advantage_diagnostics(rows, components=(), epsilon=1e-4):
    return _json.loads(_core.advantage_diagnostics(rows, list(components), epsilon))


def simulate(config_toml, strategy=None, steps=None, seed=None):
    """Runs the simulator from TOML text; returns (summary dict, trace csv text)."""
    out = _core.simulate(config_toml, strategy, steps, seed)
    return _json.loads(out["summary"]), out["trace_csv"]
