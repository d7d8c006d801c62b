"""Discrete solver and verification workbench for prescribed-mean-curvature disks."""

__version__ = "0.1.0"
