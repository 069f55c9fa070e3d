"""Business-logic-driven Text-to-SQL dataset synthesis and evaluation."""

__version__ = "0.1.0"
