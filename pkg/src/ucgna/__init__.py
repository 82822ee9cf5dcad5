"""Gas-network-aware unit commitment: tri-level model, single-level MISOCP and Benders solver."""

__version__ = "0.1.0"
