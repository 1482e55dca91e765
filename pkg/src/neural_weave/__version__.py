"""Version information for neural_weave."""

__version__ = "0.3.0"
__version_info__ = (0, 3, 0)

__title__ = "neural_weave"
__description__ = "Neural multi-scale BSDF for woven fabrics: pattern synthesis, Monte Carlo oracle, network and renderer"
__license__ = "MIT"
