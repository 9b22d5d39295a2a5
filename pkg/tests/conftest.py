"""Session-wide fixtures for expensive component explorations."""

from __future__ import annotations

import pytest

from flipgraph.graph import Component, explore_component
from flipgraph.scheme import Format, standard_scheme


@pytest.fixture(scope="session")
def component_222() -> Component:
    """Complete census around the standard (2,2,2) scheme, cap 8."""
    return explore_component(standard_scheme(Format(2, 2, 2)), 8)


@pytest.fixture(scope="session")
def shell_333_radius2() -> Component:
    """Radius-2 neighborhood of the standard (3,3,3) scheme, cap 27."""
    return explore_component(
        standard_scheme(Format(3, 3, 3)), 27, radius=2, identity="pairwise"
    )
