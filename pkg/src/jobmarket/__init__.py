"""Batch analytics over job-advertisement corpora.

Turns a corpus of job ads into semantically grouped titles, role-based skill
clusters, frequency and geographic breakdowns, and lift-ranked skill
recommendations.
"""

__version__ = "0.1.0"
