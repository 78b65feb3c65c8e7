"""lexparse: dynamic knowledge-augmented semantic parsing harness.

A parser's generator is augmented at inference time with a growing
key-value lexicon of expert knowledge about open-vocabulary constructs.
The package covers synthetic data generation, retrieval, context
assembly, the episode protocol, metrics, and an interactive API server
for human-in-the-loop feedback.
"""

from .lexicon import KnowledgeBase
from .types import Domain, IdentityMode, Instance, LexiconEntry, Source

__all__ = [
    "Domain",
    "IdentityMode",
    "Instance",
    "KnowledgeBase",
    "LexiconEntry",
    "Source",
]

__version__ = "0.1.0"
