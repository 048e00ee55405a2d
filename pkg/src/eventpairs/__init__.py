"""Toolkit for mining contingent event pairs from narrative corpora.

Pipeline stages: ingest raw screenplays / pre-annotated documents,
extract verb events and adjacency statistics per genre, score pairs
with distributional contingency measures, refine the top candidates
with web-search hit counts, and generate/score forced-choice human
evaluation tasks.
"""

__version__ = "0.1.0"
