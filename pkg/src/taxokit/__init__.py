"""Topic-taxonomy toolkit: corpus preprocessing, candidate-term selection,
LLM-assisted hierarchy construction, merchant tagging, and expansion benchmarks.
"""

__version__ = "0.1.0"
