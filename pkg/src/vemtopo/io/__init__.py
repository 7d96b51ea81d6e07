"""Exporters, checkpoints and run configuration."""
from vemtopo.io.checkpoint import Checkpoint, read_checkpoint, write_checkpoint
from vemtopo.io.config import (
    RunConfig,
    config_from_dict,
    dumps_toml,
    ensure_output_dir,
    load_config,
    write_config,
)
from vemtopo.io.history import read_history, write_history
from vemtopo.io.svg import gray_value, svg_string, write_svg_density
from vemtopo.io.vtk import read_vtk, vtk_string, write_vtk

__all__ = [
    "Checkpoint", "RunConfig", "config_from_dict", "dumps_toml", "ensure_output_dir", "gray_value",
    "load_config", "read_checkpoint", "read_history", "read_vtk", "svg_string", "vtk_string",
    "write_checkpoint", "write_config", "write_history", "write_svg_density", "write_vtk",
]
