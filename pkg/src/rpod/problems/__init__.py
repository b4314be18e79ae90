"""Benchmark and synthetic system generators."""
