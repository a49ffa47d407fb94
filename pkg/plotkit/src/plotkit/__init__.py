"""Publication-style figures from zenolab CSV outputs."""

__version__ = "0.1.0"

from .render import FigureSpec, render, FIGURE_KINDS
