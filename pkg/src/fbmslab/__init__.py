"""Free boundary minimal surfaces in the unit ball: meshes, relaxation, verification."""

__version__ = "0.1.0"
