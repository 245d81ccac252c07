"""Natural-language instructions to STL to collision-free trajectories, with checking loops and baselines."""

__version__ = "0.1.0"
