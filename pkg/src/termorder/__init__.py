"""Term-order aware ad-hoc retrieval: SITO statistics, SDM-M and PLM-M scoring,
and an evaluation / constraint-checking harness."""

from .index import CollectionStats, PositionalIndex, PostingList, WindowKind, WindowSpec, build_index
from .plm import PlmParams
from .sdm import ScoredDoc, SdmParams
from .sito import Sito, SitoConfig, g_weight, h_weight, sem_from_counts
from .text import Document, Pipeline, Query, Token, Vocabulary, read_corpus, read_topics, stem, tokenize

__all__ = [
    "CollectionStats", "Document", "Pipeline", "PlmParams", "PositionalIndex", "PostingList", "Query",
    "ScoredDoc", "SdmParams", "Sito", "SitoConfig", "Token", "Vocabulary", "WindowKind", "WindowSpec",
    "build_index", "g_weight", "h_weight", "read_corpus", "read_topics", "sem_from_counts", "stem", "tokenize",
]
