"""Command-line front end.

Subcommands ``reduce``, ``simulate``, ``bench``, ``stats`` and ``verify``
each write ``<out-dir>/<command>-<stamp>.csv`` plus a matching ``.svg``.
Options may also come from a ``key=value`` file given with ``--config``
(keys are the long option names, with or without leading dashes); options
on the command line override the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import svgplot
from .analysis import (check_basis_properties, empirical_proximity, proximity_bounds,
                       verify_geometric_sum, verify_angle_chain)
from .complexity import bench_rows, estimate_pc_pr, random_bases
from .costs import CostModel, load_cost_model
from .detection import MLGuardError
from .lattice import OracleDimensionError, shortest_vector_bruteforce
from .linalg import RankError, format_matrix, read_matrix, real_embed
from .reduction import (ConvergenceError, ReductionParams, clll_reduce, is_clll_reduced,
                        reduce_batch, rlll_reduce)
from .simulate import DETECTORS, SweepConfig, fmt, run_sweep

__all__ = ["main", "build_parser", "read_config"]

ORACLE_MAX_N = 3


# -- helpers --------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of integers, got {text!r}") from None


def _names(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _stamp(args) -> str:
    return args.stamp or time.strftime("%Y%m%d-%H%M%S")


def _write_outputs(args, command: str, csv_text: str, svgs: dict[str, str]) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = out / f"{command}-{_stamp(args)}"
    base.with_suffix(".csv").write_text(csv_text)
    for suffix, svg in svgs.items():
        Path(f"{base}{suffix}.svg").write_text(svg)
    print(f"wrote {base}.csv", file=sys.stderr)
    return base


def _cost(args) -> CostModel:
    return load_cost_model(args.cost_model) if args.cost_model else CostModel()


def _params(delta: float) -> ReductionParams:
    return ReductionParams(delta, allow_delta_one=delta == 1.0)


# -- config file ------------------------------------------------------------------

def read_config(path: str | Path) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


# -- subcommands ------------------------------------------------------------------

REDUCE_FIELDS = ("key", "value")


def cmd_reduce(args) -> int:
    H = read_matrix(args.input)
    params = _params(args.delta[0])
    reducer = rlll_reduce if args.mode == "rlll" else clll_reduce
    out = reducer(H, params, _cost(args))
    Hr, U = out.reduced_basis, out.unimodular
    start = H if Hr.shape == H.shape else real_embed(H)
    residual = float(np.linalg.norm(start @ U - Hr) / np.linalg.norm(Hr))
    report = is_clll_reduced(Hr, params.delta)
    rows = [
        ("mode", args.mode), ("delta", params.delta), ("m", Hr.shape[0]), ("n", Hr.shape[1]),
        ("swaps", out.swap_count), ("size_reductions", out.size_reduce_count),
        ("iterations", out.iterations), ("flops", out.flops.total),
        ("roundtrip_rel_error", residual), ("roundtrip_ok", residual <= 1e-9),
        ("is_reduced", report.ok), ("log_potential_initial", out.log_potential_initial),
    ]
    rows += [(f"log_potential_after_swap_{i + 1}", v) for i, v in enumerate(out.potential_trace)]
    rows += [(f"flops_{ph}_{reg}_{ev}", w) for ph, reg, ev, _, w in out.flops.rows()]
    text = _csv_text(REDUCE_FIELDS, rows)
    trace = [(0, out.log_potential_initial)] + [(i + 1, v) for i, v in enumerate(out.potential_trace)]
    svg = svgplot.line_chart({"log D": [(float(i), float(v)) for i, v in trace]},
                             title="potential during reduction", xlabel="swap",
                             ylabel="log D", log_y=False)
    base = _write_outputs(args, "reduce", text, {"": svg})
    Path(f"{base}-reduced.txt").write_text(format_matrix(Hr))
    Path(f"{base}-unimodular.txt").write_text(format_matrix(U))
    print(text, end="")
    return 0 if report.ok and residual <= 1e-9 else 1


def cmd_simulate(args) -> int:
    cfg = SweepConfig(m=args.m if args.m else args.n[0], n=args.n[0], qam=args.qam,
                      snr_db=tuple(args.snr), trials=args.trials,
                      target_errors=args.target_errors or None, delta=args.delta[0],
                      detectors=tuple(args.detectors), seed=args.seed,
                      symbols_per_channel=args.symbols_per_channel, batch=args.batch,
                      cost=_cost(args))

    def progress(p, d, r):
        print(f"snr={r.snr_db:g} {d}: {r.vector_errors}/{r.trials} ver={r.ver:.3e}", file=sys.stderr)

    res = run_sweep(cfg, progress if args.verbose else None)
    text = res.to_csv()
    label = f"{cfg.m}x{cfg.n} {cfg.qam}-QAM"
    svgs = {"": svgplot.chart_from_csv(text, "snr_db", "ver", "detector", title=f"VER, {label}",
                                       xlabel="SNR (dB)", ylabel="vector error rate"),
            "-ber": svgplot.chart_from_csv(text, "snr_db", "ber", "detector", title=f"BER, {label}",
                                           xlabel="SNR (dB)", ylabel="bit error rate")}
    _write_outputs(args, "simulate", text, svgs)
    print(text, end="")
    return 0


BENCH_FIELDS = ("n", "trials", "delta", "rlll_flops", "clll_flops", "lll_saved_pct",
                "qr_real_flops", "qr_complex_flops", "qr_saved_pct", "overall_saved_pct",
                "phase_fix_flops")


def cmd_bench(args) -> int:
    rows = bench_rows(args.n, args.trials, args.delta[0], np.random.default_rng(args.seed), _cost(args))
    table = [(r.n, r.trials, args.delta[0], r.rlll, r.clll, 100 * r.lll_saved, r.qr_real,
              r.qr_complex, 100 * r.qr_saved, 100 * r.overall_saved, r.phase_fix) for r in rows]
    text = _csv_text(BENCH_FIELDS, table)
    svg = svgplot.chart_from_csv(text, "n", ["rlll_flops", "clll_flops", "qr_real_flops",
                                             "qr_complex_flops"],
                                 title="mean flops per basis", xlabel="n", ylabel="flops")
    _write_outputs(args, "bench", text, {"": svg})
    print(text, end="")
    return 0


STATS_FIELDS = ("n", "trials", "delta", "P_c(n)", "P_r(2n)", "ratio", "P_c_stderr", "P_r_stderr",
                "P_c_evaluations", "P_r_evaluations")


def cmd_stats(args) -> int:
    rng = np.random.default_rng(args.seed)
    table = []
    for n in args.n:
        pc, pr = estimate_pc_pr(n, args.trials, args.delta[0], rng)
        table.append((n, args.trials, args.delta[0], pc.p_hat, pr.p_hat, pc.p_hat / pr.p_hat,
                      pc.stderr, pr.stderr, pc.evaluations, pr.evaluations))
    text = _csv_text(STATS_FIELDS, table)
    svg = svgplot.chart_from_csv(text, "n", ["P_c(n)", "P_r(2n)"], title="pre-check pass rate",
                                 xlabel="n", ylabel="probability")
    _write_outputs(args, "stats", text, {"": svg})
    print(text, end="")
    return 0


VERIFY_FIELDS = ("check", "n", "delta", "samples", "bound", "sample_max", "margin", "violations",
                 "note")


def _verify_rows(args):
    """Yield report rows; violations in column 7."""
    grid = [2 + 0.5 * k for k in range(13)]
    a = verify_geometric_sum(grid, 20)
    yield ("geometric_sum", "", "", len(a["rows"]), 0.0, 0.0 - a["min_margin"], a["min_margin"],
           len(a["violations"]), "alpha in 2..8 step 0.5, j <= 20")
    rng = np.random.default_rng(args.seed)
    for delta in args.delta:
        for n in args.n:
            if delta == 1.0 and n != 2:
                yield ("skipped", n, delta, 0, "", "", "", 0, "delta = 1 run only for n = 2")
                continue
            bounds = proximity_bounds(n, delta)
            H = random_bases(n, args.trials, rng)
            try:
                red = reduce_batch(H, _params(delta))
            except ConvergenceError as exc:
                yield ("reduction", n, delta, args.trials, "", "", "", 1, str(exc))
                continue
            bases = list(red.reduced)
            bad = sum(not is_clll_reduced(B, delta).ok for B in bases)
            yield ("reduced", n, delta, len(bases), "", "", "", bad, "size and Lovasz conditions")

            oracle = shortest_vector_bruteforce if n <= ORACLE_MAX_N else None
            props = [check_basis_properties(B, delta, oracle) for B in bases]
            bad = sum(not p.ok for p in props)
            ratio = max(math.log(p.product_norms / p.volume) for p in props)
            bound = n * (n - 1) / 4 * math.log(bounds.alpha)
            yield ("norm_product_log", n, delta, len(bases), bound, ratio, bound - ratio, bad,
                   "first-vector bound" + ("; minima sandwich" if oracle else "; no minima oracle"))

            cert_bad = 0
            worst = math.inf
            for B in bases:
                for i in range(n):
                    c = verify_angle_chain(B, i, delta)
                    cert_bad += not all(c.checks.values())
                    worst = min(worst, c.sin_theta - c.sin_theta_lower)
            yield ("angle_chain", n, delta, len(bases) * n, "", "", worst, cert_bad,
                   "margin = min sin(theta) - lower bound")

            if oracle is None:
                yield ("proximity", n, delta, 0, bounds.sic_bound, "", "", 0,
                       f"oracle refused: n > {ORACLE_MAX_N}")
                continue
            try:
                rep = empirical_proximity(bases, delta)
            except OracleDimensionError as exc:
                yield ("proximity", n, delta, 0, bounds.sic_bound, "", "", 0, f"oracle refused: {exc}")
                continue
            sic = float(np.max(rep.sic_max))
            zf = float(np.max(rep.zf_max))
            yield ("proximity_sic", n, delta, rep.samples, bounds.sic_bound, sic,
                   bounds.sic_bound - sic, rep.sic_violations + rep.sic_simple_violations, "")
            yield ("proximity_zf", n, delta, rep.samples, bounds.zf_bound, zf,
                   bounds.zf_bound - zf, rep.zf_violations, "")


def cmd_verify(args) -> int:
    rows = list(_verify_rows(args))
    text = _csv_text(VERIFY_FIELDS, rows)
    series: dict[str, list[tuple[float, float]]] = {}
    for check, n, delta, _, bound, smax, *_ in rows:
        if check.startswith("proximity_") and smax != "":
            key = f"{check[10:]} d={delta:g}"
            series.setdefault(f"{key} bound", []).append((float(n), float(bound)))
            series.setdefault(f"{key} max", []).append((float(n), float(smax)))
    svg = svgplot.line_chart(series, title="proximity factor: bound vs sample max", xlabel="n",
                             ylabel="squared distance ratio")
    _write_outputs(args, "verify", text, {"": svg})
    print(text, end="")
    total = sum(int(r[7]) for r in rows)
    print(f"violations: {total}", file=sys.stderr)
    return 1 if total else 0


# -- parser -----------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, delta: str = "0.99") -> None:
    p.add_argument("--config", help="key=value file; command-line options override it")
    p.add_argument("--delta", type=_floats, default=delta,
                   help="Lovasz factor (comma list for verify)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--cost-model", help="event=weight file overriding flop weights")
    p.add_argument("--out-dir", default="results", help="output directory")
    p.add_argument("--stamp", help="file name stamp instead of the current time")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clll", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="reduce a basis read from a matrix file")
    _add_common(p)
    p.add_argument("input", help="matrix text file ('m n' header, one row per line)")
    p.add_argument("--mode", choices=("clll", "rlll"), default="clll")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("simulate", help="Monte Carlo error-rate sweep")
    _add_common(p)
    p.add_argument("--n", type=_ints, default="4", help="transmit antennas")
    p.add_argument("--m", type=int, default=0, help="receive antennas (default n)")
    p.add_argument("--qam", type=int, default=16)
    p.add_argument("--snr", type=_floats, default="10,15,20,25,30", help="comma list in dB")
    p.add_argument("--trials", type=int, default=100_000, help="max vectors per point")
    p.add_argument("--target-errors", type=int, default=200,
                   help="stop a detector after this many vector errors (0 disables)")
    p.add_argument("--detectors", type=_names, default="zf,sic,lr-sic-clll,lr-sic-rlll,ml",
                   help="comma list from " + ",".join(DETECTORS))
    p.add_argument("--symbols-per-channel", type=int, default=1)
    p.add_argument("--batch", type=int, default=2000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="mean flops of both reducers")
    _add_common(p)
    p.add_argument("--n", type=_ints, default="2,4,8")
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="pass rate of the size-reduction pre-check")
    _add_common(p)
    p.add_argument("--n", type=_ints, default="4,8")
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("verify", help="check the reduced-basis theorems")
    _add_common(p, delta="0.75,0.99,1")
    p.add_argument("--n", type=_ints, default="2,3,4")
    p.add_argument("--trials", type=int, default=200, help="bases per (n, delta)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            values = read_config(known.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        cmd = next((a for a in argv if not a.startswith("-")), None)
        target = parser._subparsers._group_actions[0].choices.get(cmd)
        if target is None:
            parser.error("a subcommand is required")
        valid = {a.dest for a in target._actions}
        unknown = sorted(set(values) - valid)
        if unknown:
            parser.error(f"{known.config}: unknown keys {unknown}")
        target.set_defaults(**values)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RankError, ValueError, MLGuardError, ConvergenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
