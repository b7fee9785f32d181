"""Hand-built scenarios for tests."""

from mmwave_cg.scenario import (BaseStation, Link, LinkKind, NodeKind, NodeRef, Point2D,
                                Scenario, UserEquipment)


def build_scenario(num_subchannels, base_stations=(), access=(), d2d=(), d2d_max_distance=5.0,
                   region_radius=1000.0):
    """``access``: (ue_xy, bs_id) pairs; ``d2d``: (tx_xy, rx_xy) pairs. Access links come first."""
    stations = tuple(BaseStation(i, Point2D(*p)) for i, p in enumerate(base_stations))
    users, links = [], []

    def ue(p):
        users.append(UserEquipment(len(users), Point2D(*p)))
        return NodeRef(NodeKind.UE, len(users) - 1)

    for p, bs in access:
        links.append(Link(len(links), LinkKind.ACCESS, ue(p), NodeRef(NodeKind.BS, bs), bs))
    for tx, rx in d2d:
        links.append(Link(len(links), LinkKind.D2D, ue(tx), ue(rx)))
    return Scenario(stations, tuple(users), tuple(links), num_subchannels, region_radius, d2d_max_distance)


# Two D2D links facing the same way, 0.5 m apart: each sits in the other's main lobe.
INTERFERING_PAIR = dict(d2d=[((0, 0), (3, 0)), ((3.5, 0.2), (6.5, 0.2))])


# Acceptance criterion id -> (passed, detail); printed by conftest at session end.
ACCEPTANCE: dict[str, tuple[bool, str]] = {}
