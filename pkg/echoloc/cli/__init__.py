"""Echoloc CLI interface."""

from echoloc.cli.app import app, main

__all__ = ["app", "main"]
