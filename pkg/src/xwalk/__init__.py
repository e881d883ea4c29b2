"""Crosswalk change detection between two epochs of georeferenced detections."""
__version__ = "0.1.0"
