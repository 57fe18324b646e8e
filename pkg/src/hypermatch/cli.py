"""Command-line harness: generate instances, run algorithms, certify runs,
compare against offline oracles, and aggregate seeded trials into reports.

Exit codes: 0 success, 1 a requested check failed, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from hypermatch.core import (
    Instance,
    InstanceFormatError,
    pad_to_uniform,
    parse_instance,
    parse_vertex_instance,
    serialize_instance,
)
from hypermatch.algorithms import ALGORITHMS, Transcript, run_online
from hypermatch.adversaries import (
    ColoredInstance,
    gen_gk,
    gen_hk,
    gen_random,
    run_staircase,
)
from hypermatch.certificates import (
    DualCertificate,
    build_certificate,
    certified_ratio,
    verify_certificate,
)
from hypermatch.oracles import opt_fractional, opt_integral

CSV_COLUMNS = [
    "k", "adversary", "params", "seed", "alg", "ALG", "OPT_int", "OPT_frac",
    "cert_ratio", "emp_ratio", "cert_pass", "runtime_ms",
]


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


@dataclass
class ReportRow:
    k: int
    adversary: str = ""
    params: str = ""
    seed: str = ""
    alg: str = ""
    ALG: str = ""
    OPT_int: str = ""
    OPT_frac: str = ""
    cert_ratio: str = ""
    emp_ratio: str = ""
    cert_pass: str = ""
    runtime_ms: str = ""

    def as_list(self) -> list[str]:
        return [str(getattr(self, c)) for c in CSV_COLUMNS]

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


def _write_out(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load_instance(path: str) -> Instance:
    try:
        return parse_instance(Path(path).read_text())
    except FileNotFoundError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except InstanceFormatError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _generate(args) -> tuple[Instance, ColoredInstance | None]:
    if args.adversary == "gk":
        ci = gen_gk(args.k, args.seed)
        return ci.instance, ci
    if args.adversary == "hk":
        ci = gen_hk(args.k, args.seed)
        return ci.instance, ci
    if args.adversary == "random":
        if args.edges is None or args.resources is None:
            raise UsageError("random generator needs --edges and --resources")
        inst = gen_random(
            args.k, args.edges, args.resources, args.seed,
            weighted=args.weighted,
        )
        return inst, None
    if args.adversary == "staircase":
        raise UsageError(
            "the staircase adversary is adaptive; use `bench --adversary staircase`"
        )
    raise UsageError(f"unknown adversary {args.adversary!r}")


def cmd_gen(args) -> int:
    try:
        inst, colored = _generate(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _write_out(serialize_instance(inst), args.out)
    if colored is not None and args.out:
        Path(args.out + ".colors.json").write_text(
            json.dumps(colored.to_json_obj(), indent=2)
        )
    return 0


def _transcript_json(transcript: Transcript, inst: Instance, cert: DualCertificate | None) -> str:
    obj = transcript.to_json_obj()
    obj["instance"] = json.loads(serialize_instance(inst))
    if cert is not None:
        obj["certificate"] = cert.to_json_obj()
    return json.dumps(obj, indent=2)


def cmd_run(args) -> int:
    inst = pad_to_uniform(_load_instance(args.instance))
    algorithm = args.algorithm
    if algorithm == "weighted-waterfill" and not inst.weighted:
        print("note: unweighted instance, running with unit weights", file=sys.stderr)
    start = time.perf_counter()
    try:
        transcript = run_online(inst, algorithm)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    runtime_ms = (time.perf_counter() - start) * 1000.0

    row = ReportRow(
        k=inst.rank_k, adversary="file", params=args.instance, seed="",
        alg=algorithm, ALG=repr(transcript.objective),
        runtime_ms=f"{runtime_ms:.3f}",
    )
    failed = False
    cert = None
    if args.certify:
        if algorithm == "greedy":
            raise UsageError("--certify applies to the water-filling algorithms only")
        cert = build_certificate(transcript)
        report = verify_certificate(inst, transcript, cert, slack_tol=args.tol)
        row.cert_ratio = repr(report.certified_ratio)
        row.cert_pass = str(report.passed).lower()
        failed = failed or not report.passed
    if args.opt in ("int", "both"):
        v, _ = opt_integral(inst)
        row.OPT_int = repr(v)
        if v > 0:
            row.emp_ratio = repr(transcript.objective / v)
        if algorithm == "greedy" and transcript.objective < v / inst.rank_k - 1e-9:
            failed = True
    if args.opt in ("frac", "both"):
        lp = opt_fractional(inst)
        row.OPT_frac = repr(lp.primal_value)
        if lp.primal_value > 0:
            row.emp_ratio = repr(transcript.objective / lp.primal_value)
        if args.certify and inst.rank_k >= 3:
            bound = certified_ratio(inst.rank_k) * lp.primal_value
            if transcript.objective < bound - 1e-7:
                failed = True
    if args.transcript:
        Path(args.transcript).write_text(_transcript_json(transcript, inst, cert))
    _emit_rows([row], args.format, args.out)
    return 1 if failed else 0


def cmd_certify(args) -> int:
    try:
        obj = json.loads(Path(args.transcript).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read transcript: {exc}") from exc
    inst = parse_instance(json.dumps(obj["instance"]))
    replay = run_online(inst, obj["algorithm"])
    stored = obj["arrivals"]
    if len(stored) != len(replay.entries):
        raise CheckFailed(f"replay mismatch: arrival count {len(stored)} vs {len(replay.entries)}")
    for idx, (rec, entry) in enumerate(zip(stored, replay.entries)):
        same = (
            rec["edge"] == entry.edge.id
            and rec["dy"] == entry.decision.delta_y
            and {int(e): v for e, v in rec["displaced"].items()}
            == entry.decision.displacements
        )
        if not same:
            raise CheckFailed(f"replay mismatch at arrival index {idx}")
    cert = DualCertificate.from_json_obj(obj["certificate"])
    stored_transcript = replay  # replay verified identical
    report = verify_certificate(inst, stored_transcript, cert, slack_tol=args.tol)
    _write_out(report.to_json(), args.out)
    if not report.passed:
        raise CheckFailed(
            f"certificate failed: balance_gap={report.balance_gap}, "
            f"min_edge_slack={report.min_edge_slack}"
        )
    return 0


def cmd_reduce(args) -> int:
    try:
        vinst = parse_vertex_instance(Path(args.instance).read_text())
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc
    except InstanceFormatError as exc:
        raise UsageError(f"{args.instance}: {exc}") from exc
    from hypermatch.core import reduce_vertex_to_edge_arrival

    inst, mapping = reduce_vertex_to_edge_arrival(vinst)
    _write_out(serialize_instance(inst), args.out)
    map_path = args.map or ((args.out or "reduced") + ".map.json")
    Path(map_path).write_text(mapping.to_json())
    return 0


def cmd_opt(args) -> int:
    inst = pad_to_uniform(_load_instance(args.instance))
    out: dict = {}
    if args.which in ("int", "both"):
        v, matching = opt_integral(inst)
        out["opt_int"] = v
        out["matching"] = sorted(matching.chosen)
    if args.which in ("frac", "both"):
        lp = opt_fractional(inst, tol=args.tol)
        out["opt_frac"] = lp.primal_value
        out["lp"] = lp.to_json_obj()
    _write_out(json.dumps(out, indent=2), args.out)
    return 0


# -- bench --------------------------------------------------------------------


def _bench_trial(cfg: dict) -> dict:
    """One seeded trial; returns a ReportRow dict (runtime excluded from
    golden comparisons)."""
    start = time.perf_counter()
    k, seed, algorithm, adversary = cfg["k"], cfg["seed"], cfg["algorithm"], cfg["adversary"]
    row = ReportRow(k=k, adversary=adversary, params=cfg["params"], seed=str(seed), alg=algorithm)
    try:
        if adversary == "staircase":
            run, transcript = run_staircase(k, cfg["l"], cfg["delta"], algorithm)
            inst = run.instance
            from hypermatch.oracles import disjoint_lower_bound

            lb = disjoint_lower_bound([inst.arrivals[e] for e in run.non_selected()])
            row.OPT_int = repr(lb)
            row.ALG = repr(transcript.objective)
            if lb > 0:
                row.emp_ratio = repr(transcript.objective / lb)
        else:
            if adversary == "gk":
                inst = gen_gk(k, seed).instance
            elif adversary == "hk":
                inst = gen_hk(k, seed).instance
            elif adversary == "random":
                inst = gen_random(
                    k, cfg["edges"], cfg["resources"], seed, weighted=cfg["weighted"]
                )
            else:
                raise ValueError(f"unknown adversary {adversary!r}")
            transcript = run_online(inst, algorithm)
            row.ALG = repr(transcript.objective)
            if cfg["opt"] in ("int", "both"):
                v, _ = opt_integral(inst)
                row.OPT_int = repr(v)
                if v > 0:
                    row.emp_ratio = repr(transcript.objective / v)
            if cfg["opt"] in ("frac", "both"):
                lp = opt_fractional(inst)
                row.OPT_frac = repr(lp.primal_value)
                if lp.primal_value > 0:
                    row.emp_ratio = repr(transcript.objective / lp.primal_value)
            if cfg["certify"] and algorithm != "greedy":
                cert = build_certificate(transcript)
                report = verify_certificate(inst, transcript, cert)
                row.cert_ratio = repr(report.certified_ratio)
                row.cert_pass = str(report.passed).lower()
        ok = row.cert_pass != "false"
    except Exception as exc:  # partial trial failure marks the row failed
        row.params = f"{row.params} error={exc!r}"
        row.cert_pass = "false"
        ok = False
    row.runtime_ms = f"{(time.perf_counter() - start) * 1000.0:.3f}"
    d = row.as_dict()
    d["_ok"] = ok
    return d


def cmd_bench(args) -> int:
    if args.trials < 1:
        raise UsageError("need at least one trial")
    params = []
    if args.adversary == "staircase":
        if args.l is None or args.delta is None:
            raise UsageError("staircase needs --l and --delta")
        params.append(f"l={args.l};delta={args.delta}")
    if args.adversary == "random":
        if args.edges is None or args.resources is None:
            raise UsageError("random generator needs --edges and --resources")
        params.append(f"edges={args.edges};resources={args.resources}")
    cfgs = [
        {
            "k": args.k, "seed": args.seed + t, "algorithm": args.algorithm,
            "adversary": args.adversary, "params": ";".join(params),
            "l": args.l, "delta": args.delta, "edges": args.edges,
            "resources": args.resources, "weighted": args.weighted,
            "opt": args.opt, "certify": args.certify,
        }
        for t in range(args.trials)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_trial, cfgs))
    else:
        rows = [_bench_trial(c) for c in cfgs]
    any_failed = not all(r.pop("_ok") for r in rows)

    algs = [float(r["ALG"]) for r in rows if r["ALG"]]
    summary = {}
    if algs:
        n = len(algs)
        mean = sum(algs) / n
        if n > 1:
            var = sum((v - mean) ** 2 for v in algs) / (n - 1)
            stderr = (var / n) ** 0.5
        else:
            stderr = float("nan")
        summary = {"trials": n, "mean_ALG": mean, "stderr_ALG": stderr}

    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
        _write_out(buf.getvalue(), args.out)
        if args.out:  # JSON mirror next to the CSV
            Path(args.out + ".json").write_text(
                json.dumps({"rows": rows, "summary": summary}, indent=2)
            )
    else:
        _write_out(json.dumps({"rows": rows, "summary": summary}, indent=2), args.out)
    return 1 if any_failed else 0


def _emit_rows(rows: list[ReportRow], fmt: str, out: str | None) -> None:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow(r.as_list())
        _write_out(buf.getvalue(), out)
    else:
        _write_out(json.dumps([r.as_dict() for r in rows], indent=2), out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypermatch", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        sp.add_argument("--tol", type=float, default=1e-9)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--adversary", required=True, choices=["gk", "hk", "random", "staircase"])
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--edges", type=int, default=None)
    g.add_argument("--resources", type=int, default=None)
    g.add_argument("--weighted", action="store_true")
    common(g)

    r = sub.add_parser("run", help="run one algorithm on an instance file")
    r.add_argument("instance")
    r.add_argument("--algorithm", required=True, choices=list(ALGORITHMS))
    r.add_argument("--certify", action="store_true")
    r.add_argument("--opt", choices=["int", "frac", "both"], default=None)
    r.add_argument("--transcript", default=None, help="write the transcript JSON here")
    common(r)

    b = sub.add_parser("bench", help="run seeded trials and aggregate a report")
    b.add_argument("--algorithm", required=True, choices=list(ALGORITHMS))
    b.add_argument("--adversary", required=True, choices=["gk", "hk", "random", "staircase"])
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--l", type=int, default=None)
    b.add_argument("--delta", type=float, default=None)
    b.add_argument("--edges", type=int, default=None)
    b.add_argument("--resources", type=int, default=None)
    b.add_argument("--weighted", action="store_true")
    b.add_argument("--trials", type=int, required=True)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--opt", choices=["int", "frac", "both"], default=None)
    b.add_argument("--certify", action="store_true")
    common(b)

    c = sub.add_parser("certify", help="re-verify a stored transcript")
    c.add_argument("transcript")
    common(c)

    d = sub.add_parser("reduce", help="vertex-arrival file to edge-arrival file")
    d.add_argument("instance")
    d.add_argument("--map", default=None, help="where to write the mapping file")
    common(d)

    o = sub.add_parser("opt", help="offline oracles on an instance file")
    o.add_argument("instance")
    o.add_argument("--which", choices=["int", "frac", "both"], default="both")
    common(o)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    handlers = {
        "gen": cmd_gen, "run": cmd_run, "bench": cmd_bench,
        "certify": cmd_certify, "reduce": cmd_reduce, "opt": cmd_opt,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
