"""Rendering for bivirus CSV outputs: phase portraits, region maps, curves."""

from .render import PlotSpec, SchemaError, render

__all__ = ["PlotSpec", "SchemaError", "render"]
