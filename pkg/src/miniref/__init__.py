"""Workbench for defining, applying and verifying mini-Erlang refactorings."""

__version__ = "0.1.0"
