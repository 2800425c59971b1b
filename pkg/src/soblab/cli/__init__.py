"""Command-line front end: experiment drivers, CSV/SVG outputs, manifests."""
