"""Research-leadership flows and the geographically weighted network.

Every edge points from a participating institution to a leading one. Each
paper spreads collaboration flow ``1 / (LIN * N)`` along every
participant->leader pair, where ``LIN`` is the number of leading
institutions and ``N`` the number of institutions on the paper. The spatial
flow on the same pair is that amount scaled by the paper's mean spatial
score. Pairs of a leader with itself are skipped, so a paper emits
``(N - 1) / N`` collaboration flow in total.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field

from .corpus import Institution, PublicationRecord
from .errors import InputError
from .geo import haversine_km, spatial_score_pair
from .report import Table

DistanceFn = Callable[[Institution, Institution], float]


class MissingGeodataError(InputError):
    pass


@dataclass(frozen=True)
class PaperRoles:
    paper_id: str
    leaders: tuple[str, ...]
    institutions: tuple[str, ...]
    year: int
    field: str

    @property
    def lin(self) -> int:
        return len(self.leaders)

    @property
    def n(self) -> int:
        return len(self.institutions)

    def pairs(self):
        """Yield ``(participant, leader)`` pairs, leaders in order, then participants."""
        for a in self.leaders:
            for b in self.institutions:
                if b != a:
                    yield b, a


@dataclass(frozen=True)
class FlowEdge:
    src: str
    dst: str
    weight: float


@dataclass(frozen=True)
class EdgeWeights:
    collab: float
    spatial: float


@dataclass
class LeadershipNetwork:
    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], EdgeWeights]
    lambda_used: float
    year_range: tuple[int, int] | None = None

    def weights(self, kind: str) -> dict[tuple[str, str], float]:
        if kind not in ("collab", "spatial"):
            raise ValueError(f"unknown weight kind {kind!r}")
        return {k: getattr(w, kind) for k, w in self.edges.items()}

    def to_table(self) -> Table:
        rows = [(src, dst, w.collab, w.spatial) for (src, dst), w in sorted(self.edges.items())]
        meta = {"lambda": self.lambda_used, "nodes": len(self.nodes), "edges": len(self.edges)}
        return Table(("src", "dst", "collab_weight", "spatial_weight"), rows, meta=meta)

    def to_csv(self) -> str:
        return self.to_table().to_csv()


@dataclass
class LeadershipMass:
    mass: dict[str, float] = field(default_factory=dict)

    def total(self) -> float:
        return math.fsum(self.mass.values())

    def to_table(self) -> Table:
        return Table(("institution_id", "leadership_mass"), sorted(self.mass.items()))

    def to_csv(self) -> str:
        return self.to_table().to_csv()


def extract_roles(record: PublicationRecord) -> PaperRoles:
    institutions = record.institutions
    leaders = record.leaders
    if len(institutions) < 2:
        raise InputError(f"record {record.id!r}: needs at least two distinct institutions")
    if not leaders:
        raise InputError(f"record {record.id!r}: no corresponding affiliation")
    return PaperRoles(record.id, leaders, institutions, record.year, record.field)


def collab_flows(roles: PaperRoles) -> list[FlowEdge]:
    w = 1.0 / (roles.lin * roles.n)
    return [FlowEdge(b, a, w) for b, a in roles.pairs()]


def _lookup(geo: Mapping[str, Institution], inst: str) -> Institution:
    try:
        return geo[inst]
    except KeyError:
        raise MissingGeodataError(f"no coordinates for institution {inst!r}") from None


def paper_spatial_score(
    roles: PaperRoles,
    geo: Mapping[str, Institution],
    lam: float,
    distance: DistanceFn = haversine_km,
) -> float:
    """Mean pair score over all distinct participant->leader pairs of a paper."""
    scores = []
    for b, a in roles.pairs():
        ib, ia = _lookup(geo, b), _lookup(geo, a)
        scores.append(spatial_score_pair(distance(ib, ia), ib.country != ia.country, lam))
    return math.fsum(scores) / len(scores)


def spatial_flows(roles: PaperRoles, sps: float) -> list[FlowEdge]:
    w = sps * (1.0 / (roles.lin * roles.n))
    if w == 0:
        return []
    return [FlowEdge(b, a, w) for b, a in roles.pairs()]


def _check_lambda(lam: float) -> None:
    if not math.isfinite(lam) or lam < 0:
        raise InputError(f"lambda must be finite and non-negative, got {lam}")


def leadership_mass(records: Iterable[PublicationRecord]) -> LeadershipMass:
    """Collaboration flow arriving at each leading institution."""
    incoming: dict[str, list[float]] = {}
    for record in records:
        for e in collab_flows(extract_roles(record)):
            incoming.setdefault(e.dst, []).append(e.weight)
    return LeadershipMass({k: math.fsum(v) for k, v in sorted(incoming.items())})


def build_network(
    records: Iterable[PublicationRecord],
    institutions: Mapping[str, Institution],
    lam: float,
    distance: DistanceFn = haversine_km,
) -> tuple[LeadershipNetwork, LeadershipMass]:
    """Aggregate per-paper flows into the leadership network.

    Contributions are summed with :func:`math.fsum`, so the result does not
    depend on record order. An edge whose papers all have a zero spatial
    score keeps ``spatial == 0.0``; ranking on spatial weights ignores it.
    """
    _check_lambda(lam)
    collab: dict[tuple[str, str], list[float]] = {}
    spatial: dict[tuple[str, str], list[float]] = {}
    nodes: set[str] = set()
    years: list[int] = []
    for record in records:
        roles = extract_roles(record)
        years.append(roles.year)
        nodes.update(roles.institutions)
        for e in collab_flows(roles):
            collab.setdefault((e.src, e.dst), []).append(e.weight)
        sps = paper_spatial_score(roles, institutions, lam, distance)
        for e in spatial_flows(roles, sps):
            spatial.setdefault((e.src, e.dst), []).append(e.weight)
    edges = {
        key: EdgeWeights(math.fsum(collab[key]), math.fsum(spatial.get(key, ())))
        for key in sorted(collab)
    }
    incoming: dict[str, list[float]] = {}
    for (_, dst), contribs in collab.items():
        incoming.setdefault(dst, []).extend(contribs)
    mass = LeadershipMass({k: math.fsum(v) for k, v in sorted(incoming.items())})
    year_range = (min(years), max(years)) if years else None
    return LeadershipNetwork(tuple(sorted(nodes)), edges, float(lam), year_range), mass


def flow_distance_samples(
    records: Iterable[PublicationRecord],
    institutions: Mapping[str, Institution],
    distance: DistanceFn = haversine_km,
) -> list[tuple[int, float]]:
    """One ``(year, km)`` sample per emitted collaboration edge per paper."""
    samples = []
    for record in records:
        roles = extract_roles(record)
        for e in collab_flows(roles):
            samples.append((roles.year, distance(_lookup(institutions, e.src), _lookup(institutions, e.dst))))
    return samples
