"""needle: retrieving rare relevant documents from imbalanced corpora.

Four retrieval strategies under one fold-based evaluation harness:
predictive keyword lists, embedding-based query expansion, topic-model
classification rules, and passive/active supervised learning with a
human-in-the-loop annotation service.
"""

__version__ = "0.1.0"
