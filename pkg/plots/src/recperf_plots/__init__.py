"""Figure rendering for recperf data artifacts.

Consumes only the documented CSV/JSON schemas emitted by the recperf CLI;
never imports the model itself.
"""

__version__ = "0.1.0"

from recperf_plots.io import MissingColumnError, RaggedGridError, load_rows  # noqa: F401
from recperf_plots.render import PlotKind, PlotRequest, phase_fractions, render  # noqa: F401
