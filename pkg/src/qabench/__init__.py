"""Benchmark toolkit for annealing-style solvers on minor-embedded graph instances.

The package builds hardware-topology target graphs, constructs and refines
minor-embeddings via iterative chain splitting, generates max-cut and
weighted-MIS instances of controlled density, solves them with a simulated
annealer acting on the embedded physical problem (plus classical baselines),
and reports ratios to a reference solution.
"""

__version__ = "0.1.0"

SCHEMA_VERSION = 1
