"""Rastreamento multiobjeto com filtro de partículas guiado por PSO."""

__version__ = "1.0.0"
