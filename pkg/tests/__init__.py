"""Tests for the ballstream package."""
