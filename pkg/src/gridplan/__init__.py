"""Hurricane-resilient co-planning of transmission lines, storage and wind farms."""

__version__ = "0.1.0"
