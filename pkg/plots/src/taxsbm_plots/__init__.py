"""Figure rendering for taxsbm analysis outputs."""

from .render import KINDS, PlotJob, SchemaError, block_order, render

__version__ = "0.1.0"
