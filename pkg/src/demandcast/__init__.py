"""demandcast: long-horizon hourly electric demand forecasting for
district energy systems.

Pipeline: meter-data cleaning, exogenous feature construction,
lasso-based variable selection, MLR / GAM / SARIMA / hybrid model
estimation, long-horizon forecasting, and a quantitative
model-comparison harness.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
