"""Tests for the singular elliptic solver, eigenvalue and verify modules."""
