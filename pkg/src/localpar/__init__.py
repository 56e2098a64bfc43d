"""Local-parallel training of MLPs at desk scale, with FLOPs cost
modeling, Pareto sweeps, diagnostic probes, and a pipeline simulator."""

__version__ = "0.1.0"
