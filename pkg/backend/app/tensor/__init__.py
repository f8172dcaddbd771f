"""Symmetric tensor representations, file formats, test-tensor models and brute-force oracles."""
