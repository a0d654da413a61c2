"""Stability analysis and simulation of join-the-shortest-queue networks."""

__version__ = "0.1.0"
