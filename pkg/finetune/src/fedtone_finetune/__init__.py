"""Fine-tuning and graph export for the minutes sentiment pipeline."""

__version__ = "0.1.0"
