"""Figure rendering for extended-particle simulation artifacts."""
from .figures import (FigureSpec, KINDS, convergence_figure, period_evolution_figure,
                      render, report_summary_figure, trajectory_overlay_figure)
from .readers import (SchemaError, read_convergence, read_field, read_path, read_report,
                      read_trajectory)

__version__ = "0.1.0"
__all__ = [
    "FigureSpec",
    "KINDS",
    "SchemaError",
    "convergence_figure",
    "period_evolution_figure",
    "render",
    "report_summary_figure",
    "trajectory_overlay_figure",
    "read_convergence",
    "read_field",
    "read_path",
    "read_report",
    "read_trajectory",
]
