"""Unit tests for PyMBQC."""
