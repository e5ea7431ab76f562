"""Tests for dex-multifractal."""
