"""
Infrastructure components: result output.
"""

from .output_writer import OutputWriter, atomic_write_text

__all__ = [
    "OutputWriter",
    "atomic_write_text",
]
