"""Virtual element topology optimization on polygonal meshes."""

__version__ = "0.1.0"
