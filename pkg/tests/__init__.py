"""Unit test package for DifLite."""
