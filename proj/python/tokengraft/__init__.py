"""Tokenizer transplantation and supertokenizer training."""

from ._tokengraft import (
    DEFAULT_SEPARATOR,
    AuxStore,
    ConfigError,
    Error,
    FormatError,
    InputError,
    Tokenizer,
    count_words,
    eval_compression,
    pseudo_store,
    read_tensors,
    train_bpe,
    train_supertokenizer,
    transplant,
    word_count_histogram,
    write_tensors,
)

INPUT_TENSOR = "embed.input"
OUTPUT_TENSOR = "embed.output"

__all__ = [
    "DEFAULT_SEPARATOR",
    "INPUT_TENSOR",
    "OUTPUT_TENSOR",
    "AuxStore",
    "ConfigError",
    "Error",
    "FormatError",
    "InputError",
    "Tokenizer",
    "count_words",
    "eval_compression",
    "pseudo_store",
    "read_tensors",
    "train_bpe",
    "train_supertokenizer",
    "transplant",
    "word_count_histogram",
    "write_tensors",
]
