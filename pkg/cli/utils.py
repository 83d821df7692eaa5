"""
CLI Utility Functions
=====================

Console output shared by every command handler: headers, status lines,
label/value rows and the number formats used for values and intervals.
"""

import logging
import math
import sys
from typing import Optional

LOG_FORMAT = '%(asctime)s %(levelname)-7s %(name)s: %(message)s'


# =============================================================================
# LOGGING
# =============================================================================

def configure_logging(verbose: bool = False) -> None:
    """INFO (or DEBUG with --verbose) to stderr, so stdout stays for results."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        datefmt='%H:%M:%S',
        stream=sys.stderr,
        force=True,
    )
    # matplotlib's font manager is chatty at DEBUG
    logging.getLogger('matplotlib').setLevel(logging.WARNING)


# =============================================================================
# OUTPUT FORMATTING
# =============================================================================

def print_header(title: str, width: int = 60) -> None:
    """
    Section header between two rules.

    EXAMPLE:
        print_header("Distinguishability")
        # ============================================================
        # DISTINGUISHABILITY
        # ============================================================
    """
    print()
    print("=" * width)
    print(title.upper())
    print("=" * width)


def print_subheader(title: str, width: int = 40) -> None:
    print()
    print(title)
    print("-" * width)


def print_success(message: str) -> None:
    print(f"✓ {message}")


def print_error(message: str) -> None:
    """Errors go to stderr."""
    print(f"Error: {message}", file=sys.stderr)


def print_warning(message: str) -> None:
    print(f"Warning: {message}")


def print_table_row(label: str, value, indent: int = 0, width: int = 22) -> None:
    """
    Aligned label: value row.

    EXAMPLE:
        print_table_row("Final value", format_value(4.1234))
        #   Final value:          4.1234
    """
    prefix = "  " * indent
    print(f"{prefix}{label + ':':<{width}} {value}")


def print_list_item(item: str, indent: int = 0, bullet: str = "•") -> None:
    prefix = "  " * indent
    print(f"{prefix}{bullet} {item}")


# =============================================================================
# NUMBER FORMATTING
# =============================================================================

def format_value(value: Optional[float], digits: int = 4) -> str:
    """Fixed-point value, or a dash for missing / NaN."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "—"
    return f"{value:.{digits}f}"


def format_interval(mean: float, low: float, high: float, digits: int = 4) -> str:
    """
    EXAMPLE:
        format_interval(2.5, 1.2348, 3.7652)  # "2.5000  [1.2348, 3.7652]"
    """
    return f"{format_value(mean, digits)}  [{format_value(low, digits)}, {format_value(high, digits)}]"


def format_bool(value: bool) -> str:
    return "Yes" if value else "No"


def format_count(count: int, singular: str, plural: str = None) -> str:
    """
    EXAMPLE:
        format_count(1, "repetition")   # "1 repetition"
        format_count(20, "repetition")  # "20 repetitions"
    """
    if plural is None:
        plural = singular + "s"
    word = singular if count == 1 else plural
    return f"{count} {word}"
