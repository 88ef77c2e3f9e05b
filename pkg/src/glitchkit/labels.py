"""Glitch class labels shared across the toolkit."""
from __future__ import annotations

from enum import IntEnum


class GlitchClass(IntEnum):
    """Five-way frame label: one normal class plus four texture glitches."""

    NORMAL = 0
    STRETCHED = 1
    LOWRES = 2
    MISSING = 3
    PLACEHOLDER = 4

    @property
    def short_name(self) -> str:
        return self.name.lower()

    @classmethod
    def from_name(cls, name: str) -> "GlitchClass":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown glitch class {name!r}") from None


NUM_CLASSES = len(GlitchClass)

GLITCH_CLASSES = tuple(c for c in GlitchClass if c is not GlitchClass.NORMAL)

CLASS_NAMES = tuple(c.short_name for c in GlitchClass)
