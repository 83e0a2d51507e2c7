"""Flow-matching density estimation for trajectory anomaly scoring."""

try:
    from ._specflow import *  # noqa: F401,F403  installed package layout
except ImportError:
    from _specflow import *  # noqa: F401,F403  build-tree layout
