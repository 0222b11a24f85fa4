"""Small shared helpers."""

import math


def fmt_float(x):
    """Format a float with 17 significant digits (round-trip exact)."""
    if x is None:
        return ""
    return "%.17g" % float(x)


def factorial(k):
    return math.factorial(int(k))
