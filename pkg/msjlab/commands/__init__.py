"""CLI commands"""
from msjlab.commands import asymptotic, compare, exact, saturated, simulate, sweep

__all__ = ["asymptotic", "compare", "exact", "saturated", "simulate", "sweep"]
