"""Image curation toolkit: crawl, detect, score, and reclassify keyword image sets."""

__version__ = "0.1.0"
