from .embedder import Embedder, HashedBagOfWordsEmbedder
from .index import DeclRecord, IndexManifest, LeanIndex, build_index, load_index
from .search import AgenticResult, RankedHit, agentic_search, semantic_search

__all__ = [
    "AgenticResult",
    "DeclRecord",
    "Embedder",
    "HashedBagOfWordsEmbedder",
    "IndexManifest",
    "LeanIndex",
    "RankedHit",
    "agentic_search",
    "build_index",
    "load_index",
    "semantic_search",
]
