"""Command-line front end: file-based pipelines with a run manifest per output directory."""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, kernels
from .cones import (
    cones_from_paths,
    customer_cones,
    provider_funnels,
    rank_injection_candidates,
    read_paths,
    smfd_matrix,
)
from .deagg import Ipv6Prefix, Mode, build_schedule, generate_stream, verify_schedule
from .deagg.hints import analyze_aggregation_hints, format_table
from .deagg.schedule import POLICIES, AnnouncementSchedule
from .deagg.stream import read_jsonl, write_jsonl
from .defense import DefenseConfig, DefensePipeline, accepted_events, iter_decisions
from .errors import KirinError
from .ilp import DEFAULT_BIG_M, DEFAULT_TIME_LIMIT, parse_sweep, run_sweep, write_sweep_csv
from .ilp.sweep import PARAMS
from .propagation import (
    MultilateralMode,
    compare_to_smfd,
    injections_for_lans,
    read_injections,
    simulate,
)
from .rib import PROFILE_NAMES, RibSimulator, load_profile, write_timeline
from .topology import build_session_matrix, read_peering_lans, read_relationships, validation_report

log = logging.getLogger("kirinlab")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2
_SUBCOMMANDS = ("topo_cmd", "scenario", "sim_cmd")


class Run:
    """Collects inputs and outputs for the manifest of one command."""

    def __init__(self, args: argparse.Namespace, argv: list[str]):
        self.args = args
        self.argv = argv
        self.started = _now()
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.out = Path(args.out) if getattr(args, "out", None) else None
        if self.out:
            self.out.mkdir(parents=True, exist_ok=True)

    def input(self, path: str | None) -> str | None:
        if path:
            self.inputs[str(path)] = _sha256(path)
        return path

    def path(self, name: str) -> Path:
        if self.out is None:
            raise KirinError("this command needs --out")
        self.outputs.append(name)
        return self.out / name

    def write_json(self, name: str, data) -> None:
        with open(self.path(name), "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=1, sort_keys=True)
            fh.write("\n")

    def finish(self) -> None:
        if self.out is None:
            return
        echo = {k: v for k, v in sorted(vars(self.args).items()) if k != "func"}
        manifest = {
            "command": " ".join(
                v for v in (self.args.command, *(getattr(self.args, k, None) for k in _SUBCOMMANDS)) if v
            ),
            "arguments": echo,
            "inputs": self.inputs,
            "outputs": sorted(self.outputs),
            "version": __version__,
            "kernel_backend": kernels.BACKEND,
            "seed": getattr(self.args, "seed", 0),
            "started": self.started,
            "finished": _now(),
        }
        with open(self.out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True, default=str)
            fh.write("\n")


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _asn_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def _emit(data) -> None:
    json.dump(data, sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")


# -- commands ---------------------------------------------------------------


def cmd_topo_validate(args, run: Run) -> int:
    topo = read_relationships(run.input(args.rel))
    lans = read_peering_lans(run.input(args.lans)) if args.lans else []
    report = validation_report(topo, lans)
    if report["orphan_asns"]:
        log.warning("orphan ASNs (in LAN data, not in relationships): %s", report["orphan_asns"])
    if run.out:
        run.write_json("validation.json", report)
    _emit(report)
    return EXIT_OK


def cmd_funnel(args, run: Run) -> int:
    topo = read_relationships(run.input(args.rel))
    if args.paths:
        cones = cones_from_paths(topo, read_paths(run.input(args.paths)))
    else:
        cones = customer_cones(topo)
    funnels = provider_funnels(cones)
    data = {str(t): sorted(f.members) for t, f in funnels.items()}
    if run.out:
        run.write_json("funnels.json", data)
    if args.target is not None:
        f = funnels.get(args.target)
        if f is None:
            raise KirinError(f"AS{args.target} not in topology")
        _emit({"target": args.target, "members": sorted(f.members), "fd": f.degree})
    elif not run.out:
        _emit(data)
    return EXIT_OK


def _peering_smfd(args, run: Run):
    topo = read_relationships(run.input(args.rel))
    sm = build_session_matrix(read_peering_lans(run.input(args.lans)))
    cones = customer_cones(topo)
    if args.injection:
        injection = _asn_list(args.injection)
    else:
        injection = rank_injection_candidates(cones, sm, args.top_k)
    return topo, sm, smfd_matrix(provider_funnels(cones), sm, injection), injection


def cmd_solve(args, run: Run) -> int:
    scenario = args.scenario
    if scenario == "transit":
        data = build_session_matrix(read_peering_lans(run.input(args.lans)))
        extra = {}
    else:
        _, _, data, injection = _peering_smfd(args, run)
        extra = {"injection_set": injection}
    points = parse_sweep(args.sweep, scenario)
    big_m = None if args.tight_bigm else args.big_m
    results = run_sweep(scenario, data, points, args.time_limit, big_m, args.jobs)
    with open(run.path("sweep.csv"), "w", encoding="utf-8", newline="") as fh:
        write_sweep_csv(results, fh, scenario, include_wall_time=not args.reproducible)
    detail = [
        {**params, **sol.to_dict(), **({"wall_time": None} if args.reproducible else {})}
        for params, sol in results
    ]
    run.write_json("solutions.json", {"scenario": scenario, **extra, "points": detail})
    k1, k2 = PARAMS[scenario]
    for params, sol in results:
        print(f"{scenario} {k1}={params[k1]} {k2}={params[k2]}: {sol.objective_value} ({sol.status.value})")
    return EXIT_OK


def _sessions(args) -> list[tuple[str, int]]:
    if args.sessions_file:
        out = []
        with open(args.sessions_file, encoding="utf-8", newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].startswith("#") or row[0] == "session_id":
                    continue
                out.append((row[0].strip(), int(row[1])))
        return out
    width = len(str(max(args.sessions - 1, 0)))
    return [(f"s{i:0{width}d}", args.limit) for i in range(args.sessions)]


def cmd_plan(args, run: Run) -> int:
    run.input(args.sessions_file)
    sessions = _sessions(args)
    ids = [sid for sid, _ in sessions]
    groups = None
    if args.groups > 1:
        size = -(-len(ids) // args.groups)
        groups = [ids[i : i + size] for i in range(0, len(ids), size)]
    schedule = build_schedule(
        Ipv6Prefix.parse(args.parent), sessions, _asn_list(args.origins), args.max_len, groups, args.policy
    )
    report = verify_schedule(schedule)
    with open(run.path("schedule.json"), "w", encoding="utf-8") as fh:
        fh.write(schedule.dumps())
        fh.write("\n")
    run.write_json("verify.json", report.to_dict())
    print(f"placed {schedule.total()} prefixes over {len(sessions)} sessions; verify ok={report.ok}")
    return EXIT_OK if report.ok else EXIT_INTERNAL


def _load_schedule(path: str) -> AnnouncementSchedule:
    with open(path, encoding="utf-8") as fh:
        return AnnouncementSchedule.from_dict(json.load(fh))


def cmd_stream(args, run: Run) -> int:
    schedule = _load_schedule(run.input(args.schedule))
    events = generate_stream(schedule, args.mode, args.path_len, args.n_comms, args.cycles, args.seed)
    with open(run.path("stream.jsonl"), "w", encoding="utf-8") as fh:
        n = write_jsonl(events, fh)
    print(f"wrote {n} events")
    return EXIT_OK


def cmd_simulate_propagate(args, run: Run) -> int:
    if args.select_lans:
        topo, _, smfd, _ = _peering_smfd(args, run)
        lans = [l for l in args.select_lans.split(",") if l]
        injections = injections_for_lans(smfd, lans)
    else:
        if not args.injections:
            raise KirinError("give --injections or --select-lans with --lans")
        topo = read_relationships(run.input(args.rel))
        with open(run.input(args.injections), encoding="utf-8", newline="") as fh:
            injections = read_injections(fh)
        smfd = None
    report = simulate(
        topo, injections, args.peer_cone_fraction, MultilateralMode(args.multilateral), args.seed, jobs=args.jobs
    )
    with open(run.path("exposure.csv"), "w", encoding="utf-8", newline="") as fh:
        report.write_csv(fh)
    summary = report.summary()
    if smfd is not None:
        pairs = compare_to_smfd(report, smfd, lans)
        summary["smfd_comparison"] = {str(a): list(v) for a, v in pairs.items() if v != (0, 0)}
        summary["max_overestimate"] = max((p - s for p, s in pairs.values()), default=0)
    run.write_json("summary.json", summary)
    print(f"{len(injections)} injections reached {summary['reached_ases']} ASes")
    return EXIT_OK


def cmd_simulate_rib(args, run: Run) -> int:
    profile = load_profile(args.profile)
    if args.profile not in PROFILE_NAMES:
        run.input(args.profile)
    sim = RibSimulator(profile, args.shedding)
    with open(run.input(args.stream), encoding="utf-8") as fh:
        state = sim.run(read_jsonl(fh))
    with open(run.path("timeline.jsonl"), "w", encoding="utf-8") as fh:
        write_timeline(state, fh)
    summary = {"profile": profile.name, **state.summary()}
    run.write_json("rib.json", summary)
    _emit(summary)
    return EXIT_OK


def cmd_defend(args, run: Run) -> int:
    if args.config:
        with open(run.input(args.config), encoding="utf-8") as fh:
            config = DefenseConfig.from_dict(json.load(fh))
    else:
        config = DefenseConfig()
    pipe = DefensePipeline(config)
    with open(run.input(args.stream), encoding="utf-8") as src, open(
        run.path("decisions.jsonl"), "w", encoding="utf-8"
    ) as dec, open(run.path("accepted.jsonl"), "w", encoding="utf-8") as acc:

        def tee():
            for d in iter_decisions(read_jsonl(src), pipe):
                dec.write(json.dumps(d.to_dict(), separators=(",", ":")) + "\n")
                yield d

        write_jsonl(accepted_events(tee()), acc)
    stats = pipe.stats.to_dict()
    run.write_json("stats.json", stats)
    _emit(stats)
    return EXIT_OK


def cmd_agghints(args, run: Run) -> int:
    with open(run.input(args.stream), encoding="utf-8") as fh:
        table = analyze_aggregation_hints(read_jsonl(fh))
    if run.out:
        run.write_json("hints.json", table)
    print(format_table(table))
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _jobs_default() -> int:
    try:
        return max(1, int(os.environ.get("KIRINLAB_JOBS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kirinlab", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--out", required=out_required, help="output directory (gets a manifest.json)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=_jobs_default(), help="worker processes (env KIRINLAB_JOBS)")

    topo = sub.add_parser("topo", help="topology input checks").add_subparsers(dest="topo_cmd", required=True)
    sp = topo.add_parser("validate", help="validate relationship and LAN files")
    sp.add_argument("--rel", required=True)
    sp.add_argument("--lans")
    common(sp)
    sp.set_defaults(func=cmd_topo_validate)

    sp = sub.add_parser("funnel", help="customer cones and provider funnels")
    sp.add_argument("--rel", required=True)
    sp.add_argument("--paths", help="AS paths for the path-observed cone mode")
    sp.add_argument("--target", type=int, help="print the funnel of one AS")
    common(sp)
    sp.set_defaults(func=cmd_funnel)

    solve = sub.add_parser("solve", help="feasibility models").add_subparsers(dest="scenario", required=True)
    for name in ("transit", "peering"):
        sp = solve.add_parser(name, help=f"{name} scenario sweep")
        sp.add_argument("--lans", required=True)
        if name == "peering":
            sp.add_argument("--rel", required=True)
            grp = sp.add_mutually_exclusive_group(required=True)
            grp.add_argument("--injection", help="injection ASNs, comma separated")
            grp.add_argument("--top-k", type=int, help="rank injection candidates and take the top k")
        example = "l_max=1..10;p_max=5,10,20" if name == "transit" else "n=1..5;r=1,2"
        sp.add_argument("--sweep", required=True, help=f"cartesian sweep, e.g. {example!r}")
        sp.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT, help="seconds per point")
        if name == "transit":
            sp.add_argument("--big-m", type=int, default=DEFAULT_BIG_M)
            sp.add_argument("--tight-bigm", action="store_true", help="use total sessions + 1 as big-M")
        sp.add_argument("--reproducible", action="store_true", help="leave wall-time columns empty")
        common(sp, out_required=True)
        sp.set_defaults(func=cmd_solve, big_m=DEFAULT_BIG_M, tight_bigm=False)

    sp = sub.add_parser("plan", help="build a non-aggregatable announcement schedule")
    sp.add_argument("--parent", required=True, help="de-aggregated block, e.g. 2001:db8::/29")
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--sessions", type=int, help="number of sessions sharing --limit")
    grp.add_argument("--sessions-file", help="CSV session_id,limit")
    sp.add_argument("--limit", type=int, default=1000)
    sp.add_argument("--origins", required=True, help="origin ASNs, comma separated")
    sp.add_argument("--max-len", type=int, default=48)
    sp.add_argument("--groups", type=int, default=1, help="split sessions into this many timed groups")
    sp.add_argument("--policy", choices=POLICIES, default="longest-first")
    common(sp, out_required=True)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("stream", help="generate the announce/withdraw stream of a schedule")
    sp.add_argument("--schedule", required=True)
    sp.add_argument("--mode", choices=[m.value for m in Mode], default="worst")
    sp.add_argument("--path-len", type=int, default=251)
    sp.add_argument("--n-comms", type=int, default=251)
    sp.add_argument("--cycles", type=int, default=1)
    common(sp, out_required=True)
    sp.set_defaults(func=cmd_stream)

    sim = sub.add_parser("simulate", help="propagation and RIB simulation").add_subparsers(
        dest="sim_cmd", required=True
    )
    sp = sim.add_parser("propagate", help="valley-free exposure of injected routes")
    sp.add_argument("--rel", required=True)
    sp.add_argument("--injections", help="CSV session_id,neighbor,via,route_count")
    sp.add_argument("--lans", help="LAN file (with --select-lans)")
    sp.add_argument("--select-lans", help="peer on these LANs, comma separated")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--injection", help="injection ASNs for --select-lans")
    grp.add_argument("--top-k", type=int, default=10)
    sp.add_argument("--peer-cone-fraction", type=float, default=1.0)
    sp.add_argument("--multilateral", choices=[m.value for m in MultilateralMode], default="direct-only")
    common(sp, out_required=True)
    sp.set_defaults(func=cmd_simulate_propagate)

    sp = sim.add_parser("rib", help="RIB occupancy and alerts over a stream")
    sp.add_argument("--stream", required=True)
    sp.add_argument("--profile", required=True, help="mx5_best, mx5_worst, xrv9k_best, xrv9k_worst or a JSON file")
    sp.add_argument("--shedding", choices=["none", "cisco"], default="none")
    common(sp, out_required=True)
    sp.set_defaults(func=cmd_simulate_rib)

    sp = sub.add_parser("defend", help="run a stream through the ingress filters")
    sp.add_argument("--stream", required=True)
    sp.add_argument("--config", help="defense config JSON (default: no filters)")
    common(sp, out_required=True)
    sp.set_defaults(func=cmd_defend)

    sp = sub.add_parser("agghints", help="count aggregation hints in a stream")
    sp.add_argument("--stream", required=True)
    common(sp)
    sp.set_defaults(func=cmd_agghints)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        run = Run(args, [a for a in argv if not a.startswith("-v")])
        code = args.func(args, run)
        run.finish()
        return code
    except (ValueError, OSError, KeyError) as exc:  # KirinError and JSON errors are ValueErrors
        print(f"kirinlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"kirinlab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
