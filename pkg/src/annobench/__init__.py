"""annobench: LLM-assisted labeling and classification of scholarly publications.

Subpackages: corpus (ingestion, gold labels, splits), promptkit (persona
prompt matrix), annotator (chat backends, parsing, caching), classifier
(hashed n-gram logistic regression), evalkit (metrics and report files), cli
(the pipeline commands).
"""

__version__ = "0.1.0"
