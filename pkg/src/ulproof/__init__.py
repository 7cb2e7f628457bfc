"""Proving unrealizability of synthesis problems over regular tree grammars."""

__version__ = "0.1.0"
