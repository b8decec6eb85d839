"""gtebench: score local-surrogate explanations against equation-defined
ground truth on synthetic classification datasets."""

__version__ = "0.1.0"
