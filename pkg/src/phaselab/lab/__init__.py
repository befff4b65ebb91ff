"""CLI harness: configuration, orchestration, extraction, persistence."""

from .config import (
    RunConfig,
    arc_descriptor,
    build_grid,
    build_laws,
    build_state,
    child_configs,
    parse_config,
    parse_config_text,
    serialize,
)
from .extract import InterfaceExtract, extract_interface, fit_circle

__all__ = [
    "RunConfig",
    "arc_descriptor",
    "build_grid",
    "build_laws",
    "build_state",
    "child_configs",
    "parse_config",
    "parse_config_text",
    "serialize",
    "InterfaceExtract",
    "extract_interface",
    "fit_circle",
]
