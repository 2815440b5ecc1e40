"""Guess Who played with zero-shot image classification."""

from ._core import (
    NEUTRAL_PROMPT,
    AttributeTable,
    BinaryPrediction,
    Catalog,
    Decision,
    Embedding,
    EncoderBackend,
    EvalSubset,
    FixtureBackend,
    GameService,
    GameSession,
    GuessWhoError,
    OnnxClipBackend,
    PromptMethod,
    PromptPair,
    apply_scoring,
    compare_accuracies,
    contrary_pair,
    decide,
    evaluate_prompt_pair,
    has_negation,
    load_attr_file,
    neutral_pair,
    normalize_attribute,
    parse_attr_file,
    predict,
    predict_batch,
    rates,
    sample_without_replacement,
    select_eval_subset,
    softmax2,
)

__all__ = [name for name in dir() if not name.startswith("_")]
