"""Command modules for the sigcom CLI."""
