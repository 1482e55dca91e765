"""Test package for neural_weave."""
