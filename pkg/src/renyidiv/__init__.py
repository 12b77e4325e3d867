"""Mirror-image KDE on the unit cube and plug-in Renyi-alpha divergence estimation."""

__version__ = "0.1.0"
