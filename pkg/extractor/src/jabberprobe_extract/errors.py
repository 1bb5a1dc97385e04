class ExtractionError(Exception):
    """Any condition that makes an extraction run unusable."""
