"""Bundled example alignments."""

from importlib.resources import files

from .model import Alignment
from .parser import parse_alignment


def demo_text() -> str:
    """Two 5-concept classifications with six articulations, one inconsistent."""
    return files("taxoalign").joinpath("data/genus_revision.txt").read_text(encoding="utf-8")


def demo_alignment() -> Alignment:
    return parse_alignment(demo_text())
