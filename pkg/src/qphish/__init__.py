"""Quantum-classical ensemble learning for phishing-node detection on
transaction graphs, simulated exactly on statevectors."""

from . import models
from .base import Classifier, build_model
from .errors import QphishError

__version__ = "0.1.0"

__all__ = ["Classifier", "build_model", "QphishError", "models", "__version__"]
