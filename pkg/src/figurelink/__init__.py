"""figurelink: figure-caption corpus curation and embedding-space evaluation."""

__version__ = "0.1.0"
