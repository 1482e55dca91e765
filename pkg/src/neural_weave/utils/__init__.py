"""Shared utilities: logging and caching."""
