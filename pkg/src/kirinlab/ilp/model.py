"""Binary linear models for the transit and peering scenarios."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from ..cones import SmfdMatrix
from ..errors import BigMTooSmall, ParameterOutOfRange
from ..topology import SessionMatrix

DEFAULT_BIG_M = 10**10


class Sense(enum.Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


@dataclass(frozen=True)
class Constraint:
    coeffs: dict[str, int]
    cmp: str  # "<=" or ">="
    rhs: int

    def __post_init__(self):
        if self.cmp not in ("<=", ">="):
            raise ValueError(f"unsupported comparator {self.cmp!r}")

    def satisfied(self, assignment: dict[str, int]) -> bool:
        lhs = sum(a * assignment.get(v, 0) for v, a in self.coeffs.items())
        return lhs <= self.rhs if self.cmp == "<=" else lhs >= self.rhs


@dataclass
class IlpModel:
    variables: list[str]
    sense: Sense
    objective: dict[str, int]
    constraints: list[Constraint]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        declared = set(self.variables)
        if len(declared) != len(self.variables):
            raise ValueError("duplicate variable names")
        for name in self.objective:
            if name not in declared:
                raise ValueError(f"objective references undeclared variable {name}")
        for k, con in enumerate(self.constraints):
            for name in con.coeffs:
                if name not in declared:
                    raise ValueError(f"constraint {k} references undeclared variable {name}")

    @property
    def scenario(self) -> str | None:
        return self.metadata.get("scenario")

    def evaluate(self, assignment: dict[str, int]) -> int:
        return sum(c * assignment.get(v, 0) for v, c in self.objective.items())

    def violations(self, assignment: dict[str, int]) -> list[int]:
        """Indices of constraints the assignment breaks (binary domain included)."""
        if any(assignment.get(v, 0) not in (0, 1) for v in self.variables):
            return [-1]
        return [k for k, con in enumerate(self.constraints) if not con.satisfied(assignment)]

    def to_dict(self) -> dict:
        return {
            "vars": list(self.variables),
            "objective": {"sense": self.sense.value, "coeffs": dict(self.objective)},
            "constraints": [{"coeffs": dict(c.coeffs), "cmp": c.cmp, "rhs": c.rhs} for c in self.constraints],
            "metadata": _jsonable(self.metadata),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "IlpModel":
        return cls(
            list(data["vars"]),
            Sense(data["objective"]["sense"]),
            {k: int(v) for k, v in data["objective"]["coeffs"].items()},
            [Constraint({k: int(v) for k, v in c["coeffs"].items()}, c["cmp"], int(c["rhs"])) for c in data["constraints"]],
            data.get("metadata", {}),
        )


def _jsonable(meta: dict) -> dict:
    out = {}
    for k, v in meta.items():
        if k.startswith("_"):
            continue
        out[k] = [list(t) for t in v] if isinstance(v, (list, tuple)) and v and isinstance(v[0], tuple) else v
    return out


def d_var(asn: int, lan: str) -> str:
    return f"d[{asn},{lan}]"


def build_transit_model(
    s: SessionMatrix, l_max: int, p_max: int, big_m: int | None = DEFAULT_BIG_M
) -> IlpModel:
    """Maximise reachable sessions using at most ``l_max`` LANs and ``p_max`` providers.

    ``big_m=None`` selects the tight value (total sessions + 1).
    """
    if l_max < 0 or p_max < 0:
        raise ParameterOutOfRange("l_max and p_max must be >= 0")
    total = s.total()
    if big_m is None:
        big_m = total + 1
    if big_m <= total:
        raise BigMTooSmall(f"big_m={big_m} must exceed the session total {total}")
    entries = [(a, l, w) for (a, l), w in s.omega.items() if w > 0]
    by_as: dict[int, dict[str, int]] = {}
    by_lan: dict[str, dict[str, int]] = {}
    for a, l, w in entries:
        by_as.setdefault(a, {})[d_var(a, l)] = w
        by_lan.setdefault(l, {})[d_var(a, l)] = w
    lans = [l for l in s.lan_ids if l in by_lan]
    asns = [a for a in s.asns if a in by_as]
    variables = [d_var(a, l) for a, l, _ in entries] + [f"cl[{l}]" for l in lans] + [f"cp[{a}]" for a in asns]
    objective = {d_var(a, l): w for a, l, w in entries}
    constraints = [
        Constraint({f"cl[{l}]": 1 for l in lans}, "<=", l_max),
        Constraint({f"cp[{a}]": 1 for a in asns}, "<=", p_max),
    ]
    for a in asns:
        coeffs = dict(by_as[a])
        coeffs[f"cp[{a}]"] = -big_m
        constraints.append(Constraint(coeffs, "<=", 0))
    for l in lans:
        coeffs = dict(by_lan[l])
        coeffs[f"cl[{l}]"] = -big_m
        constraints.append(Constraint(coeffs, "<=", 0))
    meta = {
        "scenario": "transit",
        "l_max": l_max,
        "p_max": p_max,
        "big_m": big_m,
        "omega": [(a, l, w) for a, l, w in entries],
    }
    return IlpModel(variables, Sense.MAXIMIZE, objective, constraints, meta)


def build_peering_model(f: SmfdMatrix, n: int, r: int) -> IlpModel:
    """Minimise joined LANs so that at least ``n`` ASes see an SMFD of at least ``r``."""
    if n < 0 or r < 0:
        raise ParameterOutOfRange("n and r must be >= 0")
    rows: dict[int, dict[str, int]] = {}
    for (a, l), v in f.f.items():
        if v > 0:
            rows.setdefault(a, {})[l] = v
    asns = sorted(rows)
    lans = list(f.lan_ids)
    variables = [f"d[{l}]" for l in lans] + [f"c[{a}]" for a in asns]
    objective = {f"d[{l}]": 1 for l in lans}
    constraints = [Constraint({f"c[{a}]": 1 for a in asns}, ">=", n)]
    for a in asns:
        coeffs = {f"d[{l}]": v for l, v in sorted(rows[a].items())}
        coeffs[f"c[{a}]"] = -r
        constraints.append(Constraint(coeffs, ">=", 0))
    meta = {
        "scenario": "peering",
        "n": n,
        "r": r,
        "smfd": [(a, l, v) for a in asns for l, v in sorted(rows[a].items())],
    }
    return IlpModel(variables, Sense.MINIMIZE, objective, constraints, meta)


def affected_ases(model: IlpModel, assignment: dict[str, int]) -> dict[str, int]:
    """Peering solutions: ASes flagged by ``c`` versus ASes the LAN choice actually covers."""
    if model.scenario != "peering":
        raise ValueError("affected AS counts only apply to peering models")
    r = model.metadata["r"]
    reach: dict[int, int] = {}
    for a, l, v in model.metadata["smfd"]:
        reach.setdefault(a, 0)
        if assignment.get(f"d[{l}]", 0):
            reach[a] += v
    flagged = sum(1 for name, val in assignment.items() if name.startswith("c[") and val)
    return {"by_c": flagged, "by_selection": sum(1 for v in reach.values() if v >= r)}
