"""
SPCA-SI Monitor

Continual sparse-PCA process monitoring across sequentially arriving operating modes.
"""

__version__ = "1.0.0"
__title__ = "SPCA-SI Monitor"
__description__ = "Sparse PCA monitoring models with synaptic-intelligence continual updates"
