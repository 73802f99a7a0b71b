"""Desk-scale CTR prediction testbed built around the EST attention architecture."""

__version__ = "0.1.0"

PAD_SENTINEL = 0xFFFFFFFF
