"""Float formatting shared by the diagram and instance serializers."""

from __future__ import annotations


def format_float(v):
    """Shortest decimal form with 17 significant digits.

    17 digits are enough for float64 round-trip identity; integers and
    short decimals stay readable (no forced exponent).
    """
    return format(float(v), ".17g")
