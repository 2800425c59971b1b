"""Desk-scale derivative-supervised training for operator networks.

Submodules:
  geometry - point clouds and exact KNN stencils
  mls      - moving-least-squares derivative estimation and rate studies
  training - operator network, derivative-supervised losses, gradient surgery
  convlab  - closed-form gradient-flow theory checks
  cli      - command-line front end, CSV/SVG emission, run manifests
"""

__version__ = "0.1.0"

from . import convlab, errors, geometry, mls, training  # noqa: F401
