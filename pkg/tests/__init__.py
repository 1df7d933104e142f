"""Tests package for RHALC."""
