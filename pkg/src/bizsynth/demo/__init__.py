"""Bundled retail demo: database builder, scripted models and pack writer."""

from .author import DemoAuthor, DemoCandidate
from .pack import build_demo_pack, demo_config, scripted_providers
from .retail import build_database

__all__ = ["DemoAuthor", "DemoCandidate", "build_database", "build_demo_pack", "demo_config", "scripted_providers"]
