"""Services package initialization."""

