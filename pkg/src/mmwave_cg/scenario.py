"""Random small-cell topologies with uplink access links and D2D links."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

MAX_PLACEMENT_TRIES = 100_000


class ScenarioError(ValueError):
    pass


class InfeasibleScenario(ScenarioError):
    """Some base station would carry more access links than there are sub-channels."""


class Point2D(NamedTuple):
    x: float
    y: float


class LinkKind(str, enum.Enum):
    ACCESS = "Access"
    D2D = "D2D"


class NodeKind(str, enum.Enum):
    BS = "bs"
    UE = "ue"


class NodeRef(NamedTuple):
    kind: NodeKind
    id: int


@dataclass(frozen=True)
class BaseStation:
    id: int
    position: Point2D


@dataclass(frozen=True)
class UserEquipment:
    id: int
    position: Point2D


@dataclass(frozen=True)
class Link:
    id: int
    kind: LinkKind
    tx_node: NodeRef
    rx_node: NodeRef
    bs_id: int | None = None

    @property
    def is_access(self) -> bool:
        return self.kind is LinkKind.ACCESS


@dataclass(frozen=True)
class ScenarioConfig:
    region_radius: float = 100.0
    num_cells: int = 3
    num_access_links: int = 15
    num_d2d_links: int = 5
    d2d_max_distance: float = 5.0
    num_subchannels: int = 9
    rng_seed: int = 0

    def __post_init__(self):
        if not self.region_radius > 0 or not self.d2d_max_distance > 0:
            raise ScenarioError("region_radius and d2d_max_distance must be > 0")
        if min(self.num_cells, self.num_access_links, self.num_d2d_links) < 0:
            raise ScenarioError("counts must be >= 0")
        if self.num_subchannels < 1:
            raise ScenarioError("num_subchannels must be >= 1")
        if self.num_access_links and not self.num_cells:
            raise ScenarioError("access links need at least one cell")


@dataclass(frozen=True)
class Scenario:
    base_stations: tuple[BaseStation, ...]
    users: tuple[UserEquipment, ...]
    links: tuple[Link, ...]
    num_subchannels: int
    region_radius: float = math.inf
    d2d_max_distance: float = math.inf

    def position(self, node: NodeRef) -> Point2D:
        pool = self.base_stations if node.kind is NodeKind.BS else self.users
        return pool[node.id].position

    def link_length(self, link_id: int) -> float:
        link = self.links[link_id]
        return math.dist(self.position(link.tx_node), self.position(link.rx_node))

    @property
    def access_links(self) -> list[Link]:
        return [l for l in self.links if l.is_access]

    @property
    def d2d_links(self) -> list[Link]:
        return [l for l in self.links if not l.is_access]


def _uniform_in_disk(rng: np.random.Generator, radius: float, center=(0.0, 0.0)) -> Point2D:
    r = radius * math.sqrt(rng.random())
    phi = 2.0 * math.pi * rng.random()
    return Point2D(center[0] + r * math.cos(phi), center[1] + r * math.sin(phi))


def _nearest_bs(p: Point2D, stations) -> int:
    return min(stations, key=lambda b: (math.dist(p, b.position), b.id)).id


def generate_scenario(config: ScenarioConfig) -> Scenario:
    """Draw a topology; deterministic in ``config`` (PCG64 seeded by ``rng_seed``).

    Access link ``i`` is served by base station ``i mod num_cells``; its UE is
    rejection-sampled in the disk until that station is the nearest one, so
    cells stay balanced and association stays nearest-BS.
    """
    c = config
    per_cell = math.ceil(c.num_access_links / c.num_cells) if c.num_access_links else 0
    if per_cell > c.num_subchannels:
        raise InfeasibleScenario(
            f"{per_cell} access links per cell exceed {c.num_subchannels} sub-channels")
    rng = np.random.Generator(np.random.PCG64(c.rng_seed))

    stations = tuple(BaseStation(i, _uniform_in_disk(rng, c.region_radius))
                     for i in range(c.num_cells))
    users: list[UserEquipment] = []
    links: list[Link] = []

    def add_ue(p: Point2D) -> NodeRef:
        users.append(UserEquipment(len(users), p))
        return NodeRef(NodeKind.UE, len(users) - 1)

    for i in range(c.num_access_links):
        bs = i % c.num_cells
        for _ in range(MAX_PLACEMENT_TRIES):
            p = _uniform_in_disk(rng, c.region_radius)
            if _nearest_bs(p, stations) == bs:
                break
        else:
            raise ScenarioError(f"could not place a UE in the cell of base station {bs}")
        links.append(Link(len(links), LinkKind.ACCESS, add_ue(p), NodeRef(NodeKind.BS, bs), bs))

    for _ in range(c.num_d2d_links):
        tx = _uniform_in_disk(rng, c.region_radius)
        while True:
            rx = _uniform_in_disk(rng, c.d2d_max_distance, tx)
            if math.hypot(*rx) <= c.region_radius and rx != tx:
                break
        links.append(Link(len(links), LinkKind.D2D, add_ue(tx), add_ue(rx)))

    scenario = Scenario(stations, tuple(users), tuple(links), c.num_subchannels,
                        c.region_radius, c.d2d_max_distance)
    problems = validate_scenario(scenario)
    if problems:
        raise ScenarioError("; ".join(v.message for v in problems))
    return scenario


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    subject: int | None = None


def validate_scenario(s: Scenario) -> list[Violation]:
    """Every broken invariant of ``s``; empty when the scenario is well formed."""
    out: list[Violation] = []
    for name, pool in (("base station", s.base_stations), ("user", s.users)):
        if [n.id for n in pool] != list(range(len(pool))):
            out.append(Violation("NonDenseIds", f"{name} ids are not 0..{len(pool) - 1}"))
        for n in pool:
            if not all(map(math.isfinite, n.position)):
                out.append(Violation("NonFinitePosition", f"{name} {n.id} has a non-finite position", n.id))
            elif math.hypot(*n.position) > s.region_radius * (1 + 1e-12):
                out.append(Violation("OutsideRegion", f"{name} {n.id} lies outside the region", n.id))
    if [l.id for l in s.links] != list(range(len(s.links))):
        out.append(Violation("NonDenseIds", "link ids are not 0..L-1"))
    if s.num_subchannels < 1:
        out.append(Violation("NoSubchannels", "num_subchannels must be >= 1"))

    def exists(ref: NodeRef) -> bool:
        pool = s.base_stations if ref.kind is NodeKind.BS else s.users
        return 0 <= ref.id < len(pool)

    load: dict[int, int] = {}
    for l in s.links:
        if not (exists(l.tx_node) and exists(l.rx_node)):
            out.append(Violation("DanglingNode", f"link {l.id} references a missing node", l.id))
            continue
        if l.tx_node == l.rx_node:
            out.append(Violation("SelfLink", f"link {l.id} has tx == rx", l.id))
        if l.tx_node.kind is not NodeKind.UE:
            out.append(Violation("BadEndpoint", f"link {l.id} must be transmitted by a UE", l.id))
        if l.is_access:
            if l.rx_node.kind is not NodeKind.BS or l.bs_id != l.rx_node.id:
                out.append(Violation("BadEndpoint", f"access link {l.id} must end at its serving BS", l.id))
            else:
                load[l.bs_id] = load.get(l.bs_id, 0) + 1
        else:
            if l.rx_node.kind is not NodeKind.UE or l.bs_id is not None:
                out.append(Violation("BadEndpoint", f"D2D link {l.id} must end at a UE", l.id))
            elif s.link_length(l.id) > s.d2d_max_distance:
                out.append(Violation(
                    "D2DTooLong",
                    f"D2D link {l.id} is {s.link_length(l.id):.3f} m > {s.d2d_max_distance} m", l.id))
    for bs, n in sorted(load.items()):
        if n > s.num_subchannels:
            out.append(Violation(
                "BsOverloaded", f"base station {bs} carries {n} access links > {s.num_subchannels}", bs))
    return out


def scenario_to_dict(s: Scenario) -> dict:
    def node(ref: NodeRef) -> dict:
        return {"kind": ref.kind.value, "id": ref.id}

    return {
        "base_stations": [{"id": b.id, "position": {"x": b.position.x, "y": b.position.y}}
                          for b in s.base_stations],
        "users": [{"id": u.id, "position": {"x": u.position.x, "y": u.position.y}} for u in s.users],
        "links": [{"id": l.id, "kind": l.kind.value, "tx_node": node(l.tx_node),
                   "rx_node": node(l.rx_node), "bs_id": l.bs_id} for l in s.links],
        "num_subchannels": s.num_subchannels,
        "region_radius": None if math.isinf(s.region_radius) else s.region_radius,
        "d2d_max_distance": None if math.isinf(s.d2d_max_distance) else s.d2d_max_distance,
    }


def scenario_from_dict(d: dict) -> Scenario:
    def node(x: dict) -> NodeRef:
        return NodeRef(NodeKind(x["kind"]), int(x["id"]))

    def pos(x: dict) -> Point2D:
        return Point2D(float(x["x"]), float(x["y"]))

    def opt(v):
        return math.inf if v is None else float(v)

    return Scenario(
        base_stations=tuple(BaseStation(int(b["id"]), pos(b["position"])) for b in d["base_stations"]),
        users=tuple(UserEquipment(int(u["id"]), pos(u["position"])) for u in d["users"]),
        links=tuple(Link(int(l["id"]), LinkKind(l["kind"]), node(l["tx_node"]), node(l["rx_node"]),
                         None if l.get("bs_id") is None else int(l["bs_id"])) for l in d["links"]),
        num_subchannels=int(d["num_subchannels"]),
        region_radius=opt(d.get("region_radius")),
        d2d_max_distance=opt(d.get("d2d_max_distance")),
    )


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n", encoding="utf-8")


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
