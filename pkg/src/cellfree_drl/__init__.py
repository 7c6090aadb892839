"""Anchor-based DDPG partitioning of cell-free networks into subnetworks."""

__version__ = "0.1.0"
