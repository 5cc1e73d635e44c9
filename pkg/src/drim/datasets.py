"""Bundled graph fixtures.

`urv_email` is a synthetic surrogate of the URV email network with
matched statistics (1133 nodes, 5452 edges, max degree 71, connected);
see scripts/make_graph_fixture.py for its construction. Any experiment
accepts an external edge-list path in its place.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from drim.network import Graph, load_edge_list


def urv_email_path() -> Path:
    return Path(resources.files("drim").joinpath("data/urv_email.edges"))  # type: ignore[arg-type]


def load_urv_email() -> Graph:
    """The default experiment graph: 1133 nodes, 5452 edges."""
    return load_edge_list(urv_email_path())
