"""qlinksim: quantum link model simulation of a parametrically driven transmon device."""

__version__ = "0.1.0"
