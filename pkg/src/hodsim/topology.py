"""Hexagonal cell topology for the overlay IDS simulator.

Cells are flat-top hexagons addressed by axial coordinates (q, r).  The grid is
a centered hexagonal patch of `rings` rings around (0, 0); adjacent cell
centroids are sqrt(3) * cell_radius apart.  Each cell hosts one cluster node at
its centroid plus `sensors_per_cell` sensors placed uniformly inside the
hexagon.  Cells are grouped into regions of at most three mutually adjacent
cells (a triad meeting at a shared lattice corner); each region hosts one
regional node at the centroid of its member cells.  A single base station sits
on the +x axis at three times the grid bounding radius.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field

SQRT3 = math.sqrt(3.0)

# Axial neighbor offsets, fixed order (E, NE, N, W, SW, S for flat-top).
HEX_DIRS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))


@dataclass(frozen=True, order=True)
class HexCoord:
    """Axial hex coordinate."""

    q: int
    r: int


def hex_distance(a: HexCoord, b: HexCoord) -> int:
    """Hex grid distance between two cells (number of steps)."""
    dq = a.q - b.q
    dr = a.r - b.r
    return (abs(dq) + abs(dr) + abs(dq + dr)) // 2


def hex_neighbors(c: HexCoord) -> list[HexCoord]:
    """The six adjacent cells, in fixed HEX_DIRS order."""
    return [HexCoord(c.q + dq, c.r + dr) for dq, dr in HEX_DIRS]


def build_hex_grid(rings: int) -> list[HexCoord]:
    """All cells within `rings` steps of the origin, sorted by (q, r).

    A centered patch with r rings has 3*r*(r+1) + 1 cells.
    """
    if rings < 0:
        raise ValueError("rings must be >= 0")
    origin = HexCoord(0, 0)
    cells = [
        HexCoord(q, r)
        for q in range(-rings, rings + 1)
        for r in range(-rings, rings + 1)
        if hex_distance(HexCoord(q, r), origin) <= rings
    ]
    cells.sort()
    return cells


def axial_to_xy(c: HexCoord, cell_radius_m: float) -> tuple[float, float]:
    """Centroid of a cell in meters (flat-top orientation)."""
    x = 1.5 * cell_radius_m * c.q
    y = SQRT3 * cell_radius_m * (c.r + c.q / 2.0)
    return (x, y)


def hex_corners(c: HexCoord, cell_radius_m: float) -> list[tuple[float, float]]:
    """The six corners of a flat-top hexagonal cell."""
    cx, cy = axial_to_xy(c, cell_radius_m)
    out = []
    for k in range(6):
        ang = math.pi / 3.0 * k
        out.append((cx + cell_radius_m * math.cos(ang), cy + cell_radius_m * math.sin(ang)))
    return out


def point_in_hex(x: float, y: float, c: HexCoord, cell_radius_m: float) -> bool:
    """Whether (x, y) lies inside cell c (boundary inclusive)."""
    cx, cy = axial_to_xy(c, cell_radius_m)
    dx = abs(x - cx)
    dy = abs(y - cy)
    eps = 1e-9 * cell_radius_m
    if dy > SQRT3 / 2.0 * cell_radius_m + eps:
        return False
    return SQRT3 * dx + dy <= SQRT3 * cell_radius_m + eps


def region_anchor(c: HexCoord) -> HexCoord:
    """Anchor cell of the triad containing c.

    Triads have the shape {anchor, anchor+(1,0), anchor+(0,1)} tiled over the
    anchor lattice {(q, r) : (q - r) % 3 == 0}; the member offset of any cell
    is determined by (q - r) mod 3.  The three members of a triad meet at one
    lattice corner and are pairwise adjacent.
    """
    m = (c.q - c.r) % 3
    if m == 0:
        return c
    if m == 1:
        return HexCoord(c.q - 1, c.r)
    return HexCoord(c.q, c.r - 1)


def group_regions(cells: list[HexCoord]) -> list[tuple[HexCoord, ...]]:
    """Partition cells into triad regions; boundary remainders shrink to 2 or 1.

    Returns region member tuples sorted by anchor; members sorted by (q, r).
    For a centered patch of r rings this yields (r + 1)**2 regions.
    """
    present = set(cells)
    by_anchor: dict[HexCoord, list[HexCoord]] = {}
    for c in cells:
        by_anchor.setdefault(region_anchor(c), []).append(c)
    regions = []
    for anchor in sorted(by_anchor):
        members = tuple(sorted(by_anchor[anchor]))
        assert all(m in present for m in members)
        regions.append(members)
    return regions


class NodeRole(enum.Enum):
    SENSOR = "Sensor"
    CLUSTER = "ClusterNode"
    REGIONAL = "RegionalNode"
    BASE = "BaseStation"


@dataclass(frozen=True)
class Node:
    """A placed node.  cell is None for regional nodes and the base station."""

    node_id: int
    role: NodeRole
    cell: HexCoord | None
    x: float
    y: float
    region_id: int | None


@dataclass
class Topology:
    rings: int
    cell_radius_m: float
    sensors_per_cell: int
    seed: int
    cells: list[HexCoord]
    regions: list[tuple[HexCoord, ...]]
    nodes: list[Node] = field(default_factory=list)

    # ---- lookups (built once in build_topology) ----
    cluster_by_cell: dict[HexCoord, int] = field(default_factory=dict)
    sensors_by_cell: dict[HexCoord, list[int]] = field(default_factory=dict)
    regional_by_region: dict[int, int] = field(default_factory=dict)
    region_of_cell: dict[HexCoord, int] = field(default_factory=dict)
    base_id: int = -1

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def role(self, node_id: int) -> NodeRole:
        return self.nodes[node_id].role

    def position(self, node_id: int) -> tuple[float, float]:
        n = self.nodes[node_id]
        return (n.x, n.y)

    def distance(self, a: int, b: int) -> float:
        ax, ay = self.position(a)
        bx, by = self.position(b)
        return math.hypot(ax - bx, ay - by)

    def cluster_of(self, cell: HexCoord) -> int:
        return self.cluster_by_cell[cell]

    def sensors_of(self, cell: HexCoord) -> list[int]:
        return self.sensors_by_cell[cell]

    def regional_of_cell(self, cell: HexCoord) -> int:
        return self.regional_by_region[self.region_of_cell[cell]]

    def parent_of(self, node_id: int) -> int | None:
        """Next hop up the reporting hierarchy, None for the base station."""
        n = self.nodes[node_id]
        if n.role is NodeRole.SENSOR:
            return self.cluster_by_cell[n.cell]
        if n.role is NodeRole.CLUSTER:
            return self.regional_by_region[n.region_id]
        if n.role is NodeRole.REGIONAL:
            return self.base_id
        return None

    def containing_cell(self, x: float, y: float) -> HexCoord | None:
        """Cell containing (x, y); boundary ties go to the smallest (q, r)."""
        for c in self.cells:  # cells are sorted, so ties resolve deterministically
            if point_in_hex(x, y, c, self.cell_radius_m):
                return c
        return None

    def bounding_radius_m(self) -> float:
        return max(
            math.hypot(*axial_to_xy(c, self.cell_radius_m)) for c in self.cells
        ) + self.cell_radius_m

    def monitor_ids(self) -> list[int]:
        return [
            n.node_id
            for n in self.nodes
            if n.role in (NodeRole.CLUSTER, NodeRole.REGIONAL, NodeRole.BASE)
        ]

    def sensor_ids(self) -> list[int]:
        return [n.node_id for n in self.nodes if n.role is NodeRole.SENSOR]


def _sample_point_in_hex(
    rng: random.Random, c: HexCoord, cell_radius_m: float
) -> tuple[float, float]:
    # Rejection sampling from the bounding box; acceptance ratio ~0.83.
    cx, cy = axial_to_xy(c, cell_radius_m)
    h = SQRT3 / 2.0 * cell_radius_m
    while True:
        x = cx + rng.uniform(-cell_radius_m, cell_radius_m)
        y = cy + rng.uniform(-h, h)
        if point_in_hex(x, y, c, cell_radius_m):
            return (x, y)


def build_topology(
    rings: int,
    sensors_per_cell: int,
    cell_radius_m: float = 50.0,
    seed: int = 0,
) -> Topology:
    """Build the full node layout for a grid.

    Node ids are assigned deterministically: cluster nodes first (cells in
    (q, r) order), then sensors (grouped by cell, in placement order), then
    regional nodes (regions in anchor order), then the base station.
    """
    if sensors_per_cell < 1:
        raise ValueError("sensors_per_cell must be >= 1")
    if cell_radius_m <= 0:
        raise ValueError("cell_radius_m must be > 0")
    cells = build_hex_grid(rings)
    regions = group_regions(cells)
    topo = Topology(
        rings=rings,
        cell_radius_m=cell_radius_m,
        sensors_per_cell=sensors_per_cell,
        seed=seed,
        cells=cells,
        regions=regions,
    )
    for rid, members in enumerate(regions):
        for c in members:
            topo.region_of_cell[c] = rid

    nodes: list[Node] = []
    for c in cells:
        x, y = axial_to_xy(c, cell_radius_m)
        nid = len(nodes)
        nodes.append(Node(nid, NodeRole.CLUSTER, c, x, y, topo.region_of_cell[c]))
        topo.cluster_by_cell[c] = nid

    rng = random.Random(f"{seed}|placement")
    for c in cells:
        ids = []
        for _ in range(sensors_per_cell):
            x, y = _sample_point_in_hex(rng, c, cell_radius_m)
            nid = len(nodes)
            nodes.append(Node(nid, NodeRole.SENSOR, c, x, y, topo.region_of_cell[c]))
            ids.append(nid)
        topo.sensors_by_cell[c] = ids

    for rid, members in enumerate(regions):
        xs, ys = zip(*(axial_to_xy(c, cell_radius_m) for c in members))
        nid = len(nodes)
        nodes.append(
            Node(nid, NodeRole.REGIONAL, None, sum(xs) / len(xs), sum(ys) / len(ys), rid)
        )
        topo.regional_by_region[rid] = nid

    topo.nodes = nodes
    base_x = 3.0 * topo.bounding_radius_m()
    topo.base_id = len(nodes)
    nodes.append(Node(topo.base_id, NodeRole.BASE, None, base_x, 0.0, None))
    return topo


def topology_dump(topo: Topology) -> str:
    """Stable text dump: one node per line (id, role, cell, x, y, region)."""
    lines = [
        "# id\trole\tcell_q\tcell_r\tx_m\ty_m\tregion",
        f"# rings={topo.rings} cells={len(topo.cells)} regions={len(topo.regions)} "
        f"sensors_per_cell={topo.sensors_per_cell} cell_radius_m={topo.cell_radius_m:g} "
        f"seed={topo.seed}",
    ]
    for n in topo.nodes:
        cq = str(n.cell.q) if n.cell is not None else "-"
        cr = str(n.cell.r) if n.cell is not None else "-"
        reg = str(n.region_id) if n.region_id is not None else "-"
        lines.append(
            f"{n.node_id}\t{n.role.value}\t{cq}\t{cr}\t{n.x:.6f}\t{n.y:.6f}\t{reg}"
        )
    return "\n".join(lines) + "\n"
