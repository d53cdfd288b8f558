"""apitrans: API-knowledge-augmented code translation toolkit.

Mines API call sequences from source code, retrieves cross-lingual API
knowledge (similar target-language sequences, their back-translations,
curated single-API mappings) from flat vector stores, drives a two-round
test-validated LLM translation loop, and ships the evaluation harness
(computational accuracy, Precision@1, parameter sweeps) to measure it.
"""

__version__ = "0.1.0"
