"""
CLI Package for the ZSPO Toolkit
================================

Structure:
    cli/
    ├── __init__.py     - Package exports (this file)
    ├── parser.py       - Subcommand definitions
    └── utils.py        - Logging setup and console formatting

Command handlers live in run.py (handle_<command>).
"""

from .parser import create_parser
from .utils import (
    configure_logging,
    print_header,
    print_subheader,
    print_success,
    print_error,
    print_warning,
    print_table_row,
    print_list_item,
    format_value,
    format_interval,
    format_bool,
    format_count,
)

__all__ = [
    # Parser
    'create_parser',
    # Output utilities
    'configure_logging',
    'print_header',
    'print_subheader',
    'print_success',
    'print_error',
    'print_warning',
    'print_table_row',
    'print_list_item',
    # Formatting
    'format_value',
    'format_interval',
    'format_bool',
    'format_count',
]
