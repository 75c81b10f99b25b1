"""Parameter sweeps over either scenario, with optimum sharing between points."""

from __future__ import annotations

import csv
import itertools
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import IO, Sequence

from ..cones import SmfdMatrix
from ..errors import IncomparableSweep
from ..topology import SessionMatrix
from .model import DEFAULT_BIG_M, affected_ases, build_peering_model, build_transit_model
from .solve import DEFAULT_TIME_LIMIT, IlpSolution, Status, branch_and_bound_solve, brute_force_solve

log = logging.getLogger(__name__)

PARAMS = {"transit": ("l_max", "p_max"), "peering": ("n", "r")}
CSV_HEADER = ("scenario", "param1", "param2", "objective", "status", "wall_time")

_RANGE = re.compile(r"^(-?\d+)\.\.(-?\d+)(?::(\d+))?$")


def parse_sweep(text: str, scenario: str) -> list[dict[str, int]]:
    """Expand ``"l_max=1..10;p_max=5,10,20"`` into the cartesian list of points.

    Ranges are inclusive and may carry a step (``1..100:5``). Both scenario
    parameters must be given; names are case-insensitive.
    """
    names = PARAMS[scenario]
    values: dict[str, list[int]] = {}
    for part in re.split(r"[;\s]+", text.strip()):
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"sweep term {part!r} is not name=values")
        name, spec = part.split("=", 1)
        name = name.strip().lower()
        if name not in names:
            raise ValueError(f"unknown {scenario} parameter {name!r}; expected {names}")
        m = _RANGE.match(spec.strip())
        if m:
            lo, hi, step = int(m.group(1)), int(m.group(2)), int(m.group(3) or 1)
            if step < 1 or hi < lo:
                raise ValueError(f"bad range {spec!r}")
            values[name] = list(range(lo, hi + 1, step))
        else:
            values[name] = [int(v) for v in spec.strip("{}").split(",") if v.strip()]
    missing = [n for n in names if n not in values]
    if missing:
        raise ValueError(f"sweep spec lacks {missing}")
    return [dict(zip(names, combo)) for combo in itertools.product(*(values[n] for n in names))]


def _build(scenario: str, data, params: dict, big_m):
    if scenario == "transit":
        return build_transit_model(data, params["l_max"], params["p_max"], big_m)
    return build_peering_model(data, params["n"], params["r"])


def solve_point(scenario: str, data, params: dict, time_limit: float, big_m=DEFAULT_BIG_M, exact: bool = False):
    model = _build(scenario, data, params, big_m)
    sol = brute_force_solve(model) if exact else branch_and_bound_solve(model, time_limit)
    if scenario == "peering" and sol.assignment:
        sol.extras["affected"] = affected_ases(model, sol.assignment)
    return dict(params), sol


def _solve_star(args):
    return solve_point(*args)


def run_sweep(
    scenario: str,
    data: SessionMatrix | SmfdMatrix,
    points: Sequence[dict],
    time_limit: float = DEFAULT_TIME_LIMIT,
    big_m: int | None = DEFAULT_BIG_M,
    jobs: int = 1,
    refine: bool = True,
) -> list[tuple[dict, IlpSolution]]:
    """Solve every point (in parallel when ``jobs > 1``) and optionally refine."""
    if scenario not in PARAMS:
        raise ValueError(f"unknown scenario {scenario!r}")
    tasks = [(scenario, data, p, time_limit, big_m) for p in points]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_solve_star, tasks))
    else:
        results = [_solve_star(t) for t in tasks]
    for params, sol in results:
        log.info("%s %s -> %s %s", scenario, params, sol.status.value, sol.objective_value)
    return refine_sweep(results) if refine else results


def _scenario_of(params: dict) -> str:
    for scenario, names in PARAMS.items():
        if set(names) <= set(params):
            return scenario
    raise IncomparableSweep(f"cannot tell the scenario of sweep point {params}")


def refine_sweep(results: list[tuple[dict, IlpSolution]]) -> list[tuple[dict, IlpSolution]]:
    """Copy optimal solutions onto timed-out points they provably carry over to.

    Transit: an optimum found with smaller or equal ``l_max`` and ``p_max`` is
    feasible for a larger budget. Peering: a LAN set that affects ``n`` ASes at
    SMFD ``r`` also works for any smaller or equal ``n`` and ``r``. Optimal
    points are never changed.
    """
    if not results:
        return []
    kinds = {_scenario_of(p) for p, _ in results}
    if len(kinds) != 1:
        raise IncomparableSweep(f"sweep mixes scenarios: {sorted(kinds)}")
    scenario = kinds.pop()
    k1, k2 = PARAMS[scenario]
    donors = [(p, s) for p, s in results if s.status is Status.OPTIMAL]
    out = []
    for params, sol in results:
        if sol.status is Status.OPTIMAL:
            out.append((params, sol))
            continue
        best = None
        for dp, ds in donors:
            if scenario == "transit":
                usable = dp[k1] <= params[k1] and dp[k2] <= params[k2]
                better = sol.objective_value is None or ds.objective_value > sol.objective_value
                if usable and better and (best is None or ds.objective_value > best[1].objective_value):
                    best = (dp, ds)
            else:
                usable = dp[k1] >= params[k1] and dp[k2] >= params[k2]
                better = sol.objective_value is None or ds.objective_value < sol.objective_value
                if usable and better and (best is None or ds.objective_value < best[1].objective_value):
                    best = (dp, ds)
        if best is None:
            out.append((params, sol))
            continue
        dp, ds = best
        status = Status.FEASIBLE_TIMEOUT if sol.status is Status.NO_SOLUTION else sol.status
        refined = replace(
            sol,
            assignment=dict(ds.assignment),
            objective_value=ds.objective_value,
            status=status,
            refined_from=dict(dp),
            extras=dict(ds.extras),
        )
        out.append((params, refined))
    return out


def write_sweep_csv(results, fh: IO[str], scenario: str, include_wall_time: bool = True) -> None:
    """Plot-ready rows; ``wall_time`` is blank when reproducible output is wanted."""
    k1, k2 = PARAMS[scenario]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for params, sol in results:
        writer.writerow(
            [
                scenario,
                params[k1],
                params[k2],
                "" if sol.objective_value is None else sol.objective_value,
                sol.status.value,
                f"{sol.wall_time:.6f}" if include_wall_time else "",
            ]
        )
