"""Command-line handlers package initialization."""
