"""Feature extraction from class-labeled image trees with frozen CNN backbones."""

__version__ = "0.1.0"
