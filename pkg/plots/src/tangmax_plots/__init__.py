"""Figure scripts over tangmax sweep/audit outputs.

Read-only consumers of the documented CSV/JSON schemas; no science is
recomputed here beyond the presentation-layer least squares line.
"""

from .audit_figure import AuditFigureResult, AuditFigureSpec, plot_audit
from .io import SchemaError, read_audit_json, read_fit_json, read_sweep_csv
from .sweep_figure import FigureSpec, SweepFigureResult, plot_sweep

__version__ = "0.1.0"

__all__ = [
    "AuditFigureResult",
    "AuditFigureSpec",
    "FigureSpec",
    "SchemaError",
    "SweepFigureResult",
    "plot_audit",
    "plot_sweep",
    "read_audit_json",
    "read_fit_json",
    "read_sweep_csv",
]
