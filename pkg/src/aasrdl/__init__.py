"""Toolchain for mode-based periodic control requirement models.

Parse, validate, diagram, simulate, statistically check, and generate
MC/DC tests from textual requirement models.
"""

__version__ = "0.1.0"
