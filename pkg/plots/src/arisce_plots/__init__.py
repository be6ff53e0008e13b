"""Figure rendering for channel-estimation sweep CSVs."""

from .figures import FIGURES, FigureSpec, fig2_spec, fig3a_spec, fig4_spec, read_sweep_csv, render

__version__ = "0.1.0"
