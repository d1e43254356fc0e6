"""Result-level fusion of OCR and ASR subtitle streams."""

__version__ = "0.1.0"
