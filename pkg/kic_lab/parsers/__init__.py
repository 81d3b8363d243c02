"""Configuration parsing."""
