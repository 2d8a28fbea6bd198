"""Acquisition guidance toolkit for apical 4-chamber echocardiography.

Cascade: heatmap landmark detection with per-landmark uncertainty ->
traffic-light transducer pose scoring -> gated LVEF estimation, plus a
streaming inference service and CLI.
"""

__version__ = "0.1.0"
