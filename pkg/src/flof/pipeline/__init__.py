"""File formats, manifests, procedural scenes, CLI and HTTP service."""

from . import io, scenes
from .io import DatasetManifest, read_volume, write_volume, open_scalar_memmap
from .runtime import SpaceRuntime, render_png

__all__ = [
    "DatasetManifest",
    "SpaceRuntime",
    "io",
    "open_scalar_memmap",
    "read_volume",
    "render_png",
    "scenes",
    "write_volume",
]
