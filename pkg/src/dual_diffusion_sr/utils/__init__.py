"""Codecs, config loading, logging and report rendering."""

from .config_loader import read_manifest, read_run_config, write_run_config
from .file_ops import atomic_write_bytes, atomic_write_json, atomic_write_text
from .image_io import read_png, write_gray_png, write_png
from .report_builder import render_report_table, write_report
from .tensor_container import read_container, write_container

__all__ = [
    "atomic_write_bytes",
    "atomic_write_json",
    "atomic_write_text",
    "read_container",
    "read_manifest",
    "read_png",
    "read_run_config",
    "render_report_table",
    "write_container",
    "write_gray_png",
    "write_png",
    "write_report",
    "write_run_config",
]
