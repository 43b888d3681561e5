"""Plotting companions for dragot experiment CSVs.

Standalone consumers of the two documented CSV schemas (evaluation records
and map point clouds); no dependency on the solver package itself.
"""

import matplotlib

matplotlib.use("Agg")

from .convergence import FigureSpec, plot_convergence
from .mk_quantiles import plot_mk_quantiles

__version__ = "0.1.0"
