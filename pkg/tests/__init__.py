"""Tests for Vibelab."""
