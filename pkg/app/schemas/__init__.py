"""Schemas package initialization."""

