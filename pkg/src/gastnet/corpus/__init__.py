"""Parsed-sentence ingestion, vocabularies, embeddings, synthetic corpora and batching."""

from .conllu import IngestionError, SyntacticSentence, Token, parse_conllu, read_conllu, to_conllu, write_conllu
from .embeddings import EmbeddingFormatError, EmbeddingTables, init_table, load_embeddings
from .splits import SOURCE, TARGET, Batch, DatasetSplits, EmptySplitError, SplitError, batch_iter, cycle_batches
from .stats import EmptyInputError, relation_counts, relation_distribution
from .synth import SynthSpec, SynthSpecError, generate_sentences, synth_corpus
from .vocab import PAD, SELF, UNK, Vocab

__all__ = [
    "IngestionError", "SyntacticSentence", "Token", "parse_conllu", "read_conllu", "to_conllu", "write_conllu",
    "EmbeddingFormatError", "EmbeddingTables", "init_table", "load_embeddings",
    "SOURCE", "TARGET", "Batch", "DatasetSplits", "EmptySplitError", "SplitError", "batch_iter", "cycle_batches",
    "EmptyInputError", "relation_counts", "relation_distribution",
    "SynthSpec", "SynthSpecError", "generate_sentences", "synth_corpus",
    "PAD", "SELF", "UNK", "Vocab",
]
