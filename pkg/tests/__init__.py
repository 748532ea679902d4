"""Tests for anosov-forge."""
