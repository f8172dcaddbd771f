"""Shift-parameter sweep, artifact emission and the command-line front end."""
