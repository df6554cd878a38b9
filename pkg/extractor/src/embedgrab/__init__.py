"""Export image datasets as unit-norm embedding files the tuning core ingests."""

from .encoders import RandomFeatureEncoder, parse_model
from .extract import DEFAULT_TEMPLATE, ExtractJob, run

__all__ = ["RandomFeatureEncoder", "parse_model", "DEFAULT_TEMPLATE",
           "ExtractJob", "run"]
__version__ = "0.1.0"
