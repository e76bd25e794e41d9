"""Importing this module registers every classifier kind."""

from .ensemble import BaggedClassifier, StackedClassifier
from .learners import ClassicalSvm, ConstantClassifier, GradientBoostedTrees, LogisticRegression
from .qsvm import QuantumKernelSvm, QuboSvm
from .vqc import VqcClassifier

__all__ = [
    "BaggedClassifier", "StackedClassifier", "ClassicalSvm", "ConstantClassifier", "GradientBoostedTrees",
    "LogisticRegression", "QuantumKernelSvm", "QuboSvm", "VqcClassifier",
]
