# semantic/__init__.py

from .embedder import SemanticEmbedder, SemanticTokens, stand_in_variant, tokenize
from .projector import SemanticProjector, project
