"""Command-line front end.

Every command resolves its parameters as flags > config file > defaults,
writes CSV or JSON to ``--out`` (stdout if omitted) and prints a one-line
summary on stderr.  Exit codes: 0 success, 1 computation failure, 2 usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable

from . import __version__
from .parallel import THREADS_ENV, default_threads
from .quadrature import QuadratureError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


class ComputationFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# value parsing


def _number(tok: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise UsageError(f"not a number: {tok!r}") from None


def parse_int(tok: str) -> int:
    x = _number(str(tok).strip())
    if not math.isfinite(x) or x != int(x):
        raise UsageError(f"not an integer: {tok!r}")
    return int(x)


def parse_float(tok: str) -> float:
    x = _number(str(tok).strip())
    if not math.isfinite(x):
        raise UsageError(f"not a finite number: {tok!r}")
    return x


def parse_positive(tok: str) -> float:
    x = parse_float(tok)
    if x <= 0:
        raise UsageError(f"must be positive: {tok!r}")
    return x


def parse_int_list(text: str) -> list[int]:
    """'1..5', '1e4,1e5' or a mix such as '2..4,10'."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            raise UsageError(f"empty item in {text!r}")
        if ".." in part:
            lo, _, hi = part.partition("..")
            a, b = parse_int(lo), parse_int(hi)
            if b < a:
                raise UsageError(f"empty range {part!r}")
            out.extend(range(a, b + 1))
        else:
            out.append(parse_int(part))
    return out


def parse_float_list(text: str) -> list[float]:
    return [parse_float(t) for t in str(text).split(",")]


def parse_residues(text: str) -> str | list[int]:
    return "worst" if str(text).strip() == "worst" else parse_int_list(text)


def parse_str(text: str) -> str:
    return str(text).strip()


def parse_threads(text: str) -> int:
    t = parse_int(text)
    if t < 1:
        raise UsageError("threads must be at least 1")
    return t


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# command table


@dataclass(frozen=True)
class Option:
    name: str
    parse: Callable[[str], Any]
    default: Any
    help: str


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    options: tuple[Option, ...]
    run: Callable[[dict], tuple[str, str]]


COMMON = (
    Option("out", parse_str, None, "output path (default stdout)"),
    Option("threads", parse_threads, None, f"worker threads (default ${THREADS_ENV} or 1)"),
)


def _probe_options(c: str, x: str, n: int | None) -> tuple[Option, ...]:
    opts = [Option("c", parse_int_list, c, "moduli, e.g. 3..20"),
            Option("x", parse_int_list, x, "cutoffs, e.g. 1e4,1e5"),
            Option("residues", parse_residues, "worst", "'worst' or an explicit residue tuple")]
    if n is None:
        opts.append(Option("n", parse_int, 3, "number of primes, 1..4"))
    if n == 2:
        opts.append(Option("product-cutoff", parse_int, None, "keep only p1 p2 <= X"))
    return tuple(opts)


def _csv_text(header: list[str], rows: list[list[str]], comments: list[str]) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _public_config(cfg: dict) -> dict:
    # threads and the output path do not affect results
    return {k: v for k, v in sorted(cfg.items()) if k not in ("threads", "out", "config")}


def _comments(cmd: str, cfg: dict, audit: Any) -> list[str]:
    return [f"densitylab {__version__} {cmd}",
            "config " + json.dumps(_public_config(cfg), sort_keys=True),
            "audit " + json.dumps(audit, sort_keys=True)]


def _report(cmd: str, cfg: dict, body: dict, audit: Any) -> str:
    doc = {"command": cmd, "version": __version__, "config": _public_config(cfg),
           "truncation_audit": audit, **body}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# commands


def _run_probe(cfg: dict, n: int, name: str) -> tuple[str, str]:
    from .expsums import CSV_HEADER, fit_exponents, probe_n

    if not 1 <= n <= 4:
        raise UsageError("n must be between 1 and 4")
    residues = cfg["residues"]
    if residues != "worst" and len(residues) != n:
        raise UsageError(f"need {n} residues, got {len(residues)}")
    if residues == "worst" and n > 1 and max(cfg["c"]) > 100:
        raise UsageError("worst-case residue enumeration is limited to c <= 100")
    rows = probe_n(n, cfg["c"], cfg["x"], residues, threads=cfg["threads"],
                   product_cutoff=cfg.get("product-cutoff"))
    ratio = max((r.abs / r.term_count for r in rows if r.term_count), default=0.0)
    fit_doc: dict[str, Any]
    try:
        fit, _ = fit_exponents(cfg["c"], cfg["x"], n, residues, rows=rows)
        fit_doc = fit.as_dict()
    except ValueError as exc:
        fit_doc = {"skipped": str(exc)}
    audit = {"phase": "isqrt-reduced, error ~1e-16 per term", "summation": "fsum per sieve block",
             "max_abs_over_term_count": ratio}
    comments = _comments(name, cfg, audit) + ["fit " + json.dumps(fit_doc, sort_keys=True)]
    text = _csv_text(CSV_HEADER, [r.csv_row() for r in rows], comments)
    if "alpha_hat" in fit_doc:
        summary = f"{name}: {len(rows)} sums, alpha_hat={fit_doc['alpha_hat']:.4f}, A_hat={fit_doc['A_hat']:.4f}"
    else:
        summary = f"{name}: {len(rows)} sums, no fit ({fit_doc['skipped']})"
    return text, summary


def cmd_probe_h1(cfg):
    return _run_probe(cfg, 1, "probe-h1")


def cmd_probe_h2(cfg):
    return _run_probe(cfg, 2, "probe-h2")


def cmd_probe_hn(cfg):
    return _run_probe(cfg, cfg["n"], "probe-hn")


def cmd_kloosterman(cfg):
    from .kloosterman import divisor_count, kloosterman_complex, weil_bound

    rows, worst_ratio, worst_imag = [], 0.0, 0.0
    for c in cfg["c"]:
        if c < 1:
            raise UsageError("moduli must be positive")
        dc = divisor_count(c)
        for m in cfg["m"]:
            for n in cfg["n"]:
                z = kloosterman_complex(m, n, c)
                wb = weil_bound(m, n, c)
                worst_ratio = max(worst_ratio, abs(z.real) / wb)
                worst_imag = max(worst_imag, abs(z.imag) / (dc * math.sqrt(c)))
                rows.append([str(m), str(n), str(c), fmt(z.real), fmt(z.imag), fmt(wb)])
    audit = {"max_abs_over_weil": worst_ratio, "max_imag_over_dc_sqrt_c": worst_imag}
    text = _csv_text(["m", "n", "c", "S", "imag", "weil_bound"], rows, _comments("kloosterman", cfg, audit))
    if worst_ratio > 1.0 + 1e-9:
        raise ComputationFailure(f"Weil bound violated: ratio {worst_ratio}")
    return text, f"kloosterman: {len(rows)} sums, max |S|/weil = {worst_ratio:.6f}"


def _weights(ks: list[int]) -> list[int]:
    from .eigenforms import SUPPORTED_WEIGHTS

    bad = [k for k in ks if k not in SUPPORTED_WEIGHTS]
    if bad:
        raise UsageError(f"unsupported weights {bad}; choose from {sorted(SUPPORTED_WEIGHTS)}")
    return ks


def cmd_petersson_verify(cfg):
    from .eigenforms import eigenform
    from .petersson import TraceRequest, spectral_trace, trace_delta

    ks = _weights(cfg["k"])
    M = cfg["mn-max"]
    if M < 1:
        raise UsageError("mn-max must be positive")
    rows, worst, worst_tail = [], 0.0, 0.0
    for k in ks:
        lam = eigenform(k, M).lam
        d11 = trace_delta(TraceRequest(1, 1, k, tol=cfg["tol"])).value
        L1 = 2.0 * math.pi**2 / ((k - 1) * d11)
        for m in range(1, M + 1):
            for n in range(1, M + 1):
                t = trace_delta(TraceRequest(m, n, k, tol=cfg["tol"]))
                spec = spectral_trace(lam[m], lam[n], k, L1)
                diff = abs(t.value - spec)
                worst, worst_tail = max(worst, diff), max(worst_tail, t.tail_bound)
                rows.append([str(k), str(m), str(n), fmt(t.value), fmt(spec), fmt(diff),
                             fmt(t.tail_bound), str(t.c_max)])
    audit = {"max_tail_bound": worst_tail, "max_abs_diff": worst}
    text = _csv_text(["k", "m", "n", "geometric", "spectral", "abs_diff", "tail_bound", "c_max"], rows,
                     _comments("petersson-verify", cfg, audit))
    if worst > cfg["check-tol"]:
        raise ComputationFailure(f"two sides differ by {worst:.3e} > {cfg['check-tol']:.3e}")
    return text, f"petersson-verify: {len(rows)} traces, max |geometric - spectral| = {worst:.3e}"


def cmd_trace_table(cfg):
    from .petersson import TraceRequest, trace_delta

    rows, worst = [], 0.0
    for k in cfg["k"]:
        for m in cfg["m"]:
            for n in cfg["n"]:
                try:
                    t = trace_delta(TraceRequest(m, n, k, cfg["c-max"], cfg["tol"]))
                except ValueError as exc:
                    raise UsageError(str(exc)) from None
                worst = max(worst, t.tail_bound)
                rows.append([str(k), str(m), str(n), fmt(t.value), fmt(t.tail_bound), str(t.c_max)])
    text = _csv_text(["k", "m", "n", "delta", "tail_bound", "c_max"], rows,
                     _comments("trace-table", cfg, {"max_tail_bound": worst}))
    return text, f"trace-table: {len(rows)} traces, max tail bound {worst:.3e}"


def _test_function(cfg):
    from .testfunctions import make_fejer

    return make_fejer(cfg["v"])


def _weight(cfg):
    from .bessel import smooth_bump

    try:
        return smooth_bump(cfg["t0"], cfg["t1"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _density(cfg, level: int, name: str):
    from .density import family_average_one_level, family_average_two_level

    fn = family_average_one_level if level == 1 else family_average_two_level
    rep = fn(_test_function(cfg), cfg["K"], _weight(cfg), tol=cfg["tol"], threads=cfg["threads"])
    body = rep.to_json()
    audit = body.pop("truncation_audit")
    text = _report(name, cfg, {"report": body}, audit)
    return text, (f"{name}: K={fmt(cfg['K'])} normalized={rep.normalized:.6f} "
                  f"target={rep.rmt_target:.6f}")


def cmd_density_1(cfg):
    return _density(cfg, 1, "density-1")


def cmd_density_2(cfg):
    return _density(cfg, 2, "density-2")


def cmd_kernels(cfg):
    from .rmt import GROUPS, KernelDensity, fourier_pair_1d, fourier_pair_2d, pair

    groups = GROUPS if cfg["groups"] == "all" else tuple(g.strip() for g in cfg["groups"].split(","))
    for g in groups:
        if g not in GROUPS:
            raise UsageError(f"unknown group {g!r}")
    if cfg["n"] not in (1, 2):
        raise UsageError("n must be 1 or 2")
    tf = _test_function(cfg)
    rows, worst = [], 0.0
    audit = []
    for g in groups:
        kd = KernelDensity(g, cfg["n"])
        p = pair(kd, tf)
        four = fourier_pair_1d(kd, tf) if cfg["n"] == 1 else fourier_pair_2d(kd, tf)
        worst = max(worst, abs(p.value - four))
        audit.append({"group": g, "tail_bound": p.tail_bound, "quad_error": p.quad_error, "T": p.T})
        rows.append([g, str(cfg["n"]), fmt(cfg["v"]), fmt(p.value), fmt(four), fmt(p.value - four),
                     fmt(p.tail_bound), fmt(p.quad_error)])
    text = _csv_text(["group", "n", "v", "xspace", "fourier", "diff", "tail_bound", "quad_error"], rows,
                     _comments("kernels", cfg, audit))
    return text, f"kernels: {len(rows)} pairings, max |xspace - fourier| = {worst:.3e}"


def cmd_rank_bounds(cfg):
    from .support import RANK_CSV_HEADER, rank_bound_rows

    if cfg["v1"] <= 0 or cfg["v2"] <= 0:
        raise UsageError("v1 and v2 must be positive")
    if min(cfg["r"]) < 1:
        raise UsageError("r must be at least 1")
    rows = rank_bound_rows(cfg["v1"], cfg["v2"], cfg["r"])
    text = _csv_text(RANK_CSV_HEADER, rows, _comments("rank-bounds", cfg, {"exact": True}))
    return text, "rank-bounds: " + " ".join(f"P{r[0]}<={float(r[3]):.4f}" for r in rows)


def _abel_instances(cfg):
    import numpy as np

    if cfg["instances"] == 0:
        return [(cfg["psi"], cfg["c"], cfg["a"], cfg["P"], cfg["K"], cfg["v"])]
    rng = np.random.default_rng(cfg["seed"])
    out = []
    for _ in range(cfg["instances"]):
        c = int(rng.integers(1, 13))
        units = [a for a in range(c) if math.gcd(a, c) == 1]
        a = int(units[rng.integers(len(units))])
        kind = ("linear", "quadratic", "hbar")[int(rng.integers(3))]
        if kind == "hbar":
            K = float(rng.uniform(5.0, 10.0))
            v = float(rng.uniform(1.0, math.log(10**4) / (2 * math.log(K))))
            P = math.ceil(K ** (2 * v))
        else:
            K, v = cfg["K"], cfg["v"]
            P = int(rng.integers(100, 10**4 + 1))
        out.append((kind, c, a, P, K, v))
    return out


def _psi(kind: str, P: int, c: int, K: float, v: float):
    from .expsums import hbar_psi, linear_psi, zero_psi
    from .testfunctions import make_fejer

    if kind == "linear":
        return linear_psi(P, 1)
    if kind == "quadratic":
        return linear_psi(P, 2)
    if kind == "zero":
        return zero_psi()
    if kind == "hbar":
        return hbar_psi(K, c, make_fejer(v))
    raise UsageError(f"unknown psi {kind!r}; choose linear, quadratic, zero or hbar")


def cmd_abel_check(cfg):
    from .expsums import abel_identity_check

    rows, worst = [], 0.0
    for kind, c, a, P, K, v in _abel_instances(cfg):
        if c < 1 or P < 2:
            raise UsageError("need c >= 1 and P >= 2")
        if kind == "hbar" and P < K ** (2 * v):
            raise UsageError("hbar weight needs P >= K^(2v) so that psi(P) = 0")
        lhs, rhs = abel_identity_check(P, c, a, _psi(kind, P, c, K, v), tol=cfg["tol"])
        d = abs(lhs - rhs)
        worst = max(worst, d)
        rows.append([kind, str(c), str(a), str(P), fmt(K), fmt(v), fmt(lhs.real), fmt(lhs.imag),
                     fmt(rhs.real), fmt(rhs.imag), fmt(d)])
    text = _csv_text(["psi", "c", "a", "P", "K", "v", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_diff"],
                     rows, _comments("abel-check", cfg, {"max_abs_diff": worst}))
    if worst > cfg["check-tol"]:
        raise ComputationFailure(f"Abel identity off by {worst:.3e}")
    return text, f"abel-check: {len(rows)} instances, max |lhs - rhs| = {worst:.3e}"


_DENSITY_OPTS = (
    Option("K", parse_positive, 20.0, "family scale"),
    Option("v", parse_positive, 0.5, "Fejer support v"),
    Option("t0", parse_positive, 1.0, "weight support start"),
    Option("t1", parse_positive, 2.0, "weight support end"),
    Option("tol", parse_positive, 1e-12, "Petersson tail tolerance"),
)

COMMANDS: dict[str, Command] = {c.name: c for c in [
    Command("probe-h1", "exponential sums over one prime", _probe_options("3..20", "1e4,1e5,1e6", 1), cmd_probe_h1),
    Command("probe-h2", "exponential sums over two primes", _probe_options("3..7", "100,300,1000", 2), cmd_probe_h2),
    Command("probe-hn", "exponential sums over n primes", _probe_options("3..5", "20,40,80", None), cmd_probe_hn),
    Command("kloosterman", "Kloosterman sums with Weil-bound audit", (
        Option("m", parse_int_list, "1..5", "m values"),
        Option("n", parse_int_list, "1..5", "n values"),
        Option("c", parse_int_list, "1..50", "moduli"),
    ), cmd_kloosterman),
    Command("petersson-verify", "geometric vs spectral Petersson traces", (
        Option("k", parse_int_list, "12,16,18,20,22,26", "weights"),
        Option("mn-max", parse_int, 20, "largest m and n"),
        Option("tol", parse_positive, 1e-9, "certified tail tolerance"),
        Option("check-tol", parse_positive, 1e-6, "allowed two-sided difference"),
    ), cmd_petersson_verify),
    Command("trace-table", "table of Delta_k(m, n)", (
        Option("k", parse_int_list, "12", "weights"),
        Option("m", parse_int_list, "1..5", "m values"),
        Option("n", parse_int_list, "1..5", "n values"),
        Option("c-max", parse_int, None, "fixed truncation (certified against tol)"),
        Option("tol", parse_positive, 1e-9, "certified tail tolerance"),
    ), cmd_trace_table),
    Command("density-1", "family average of the 1-level density", _DENSITY_OPTS, cmd_density_1),
    Command("density-2", "family average of the 2-level density", _DENSITY_OPTS, cmd_density_2),
    Command("kernels", "Katz-Sarnak kernel pairings", (
        Option("groups", parse_str, "all", "comma list of groups or 'all'"),
        Option("n", parse_int, 1, "level, 1 or 2"),
        Option("v", parse_positive, 0.4, "Fejer support v"),
    ), cmd_kernels),
    Command("rank-bounds", "bounds on the proportion of high central order", (
        Option("v1", parse_positive, 2.5, "1-level support"),
        Option("v2", parse_positive, 1.2, "2-level per-component support"),
        Option("r", parse_int_list, "1..5", "orders"),
    ), cmd_rank_bounds),
    Command("abel-check", "Abel summation identity for prime exponential sums", (
        Option("P", parse_int, 10**4, "cutoff"),
        Option("c", parse_int, 7, "modulus"),
        Option("a", parse_int, 1, "residue"),
        Option("psi", parse_str, "linear", "linear, quadratic, zero or hbar"),
        Option("K", parse_positive, 10.0, "scale for the hbar weight"),
        Option("v", parse_positive, 1.5, "Fejer support for the hbar weight"),
        Option("instances", parse_int, 0, "random instances instead of one explicit check"),
        Option("seed", parse_int, 0, "seed for random instances"),
        Option("tol", parse_positive, 1e-10, "quadrature tolerance"),
        Option("check-tol", parse_positive, 1e-6, "allowed |lhs - rhs|"),
    ), cmd_abel_check),
]}


# ---------------------------------------------------------------------------
# argument handling


def read_config(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; blank lines and '#' comments are ignored."""
    out: dict[str, str] = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc.strerror}") from None
    for i, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{i}: expected 'key = value'")
        out[key.strip().replace("_", "-")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="densitylab", description="low-lying zero statistics laboratory")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for cmd in COMMANDS.values():
        p = sub.add_parser(cmd.name, help=cmd.help, description=cmd.help)
        p.add_argument("--config", default=None, help="key = value file; flags take precedence")
        for opt in cmd.options + COMMON:
            default = "" if opt.default is None else f" (default {opt.default})"
            p.add_argument(f"--{opt.name}", dest=opt.name, default=None, help=opt.help + default)
    return parser


def resolve(cmd: Command, flags: dict[str, str | None]) -> dict[str, Any]:
    """Merge defaults, config file and flags, parsing every value."""
    options = {o.name: o for o in cmd.options + COMMON}
    raw: dict[str, Any] = {name: o.default for name, o in options.items()}
    if flags.get("config"):
        for key, value in read_config(flags["config"]).items():
            if key not in options:
                raise UsageError(f"unknown config key {key!r} for {cmd.name}")
            raw[key] = value
    for key, value in flags.items():
        if key in options and value is not None:
            raw[key] = value
    cfg = {name: (None if value is None else options[name].parse(value) if isinstance(value, str) else value)
           for name, value in raw.items()}
    if cfg["threads"] is None:
        cfg["threads"] = default_threads()
    for key in ("c", "x", "k", "m", "n", "r"):
        if isinstance(cfg.get(key), list) and not cfg[key]:
            raise UsageError(f"{key} grid is empty")
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", newline="") as fh:
        fh.write(text)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    cmd = COMMANDS[ns.command]
    try:
        cfg = resolve(cmd, vars(ns))
        text, summary = cmd.run(cfg)
        _emit(text, cfg["out"])
    except UsageError as exc:
        print(f"densitylab {cmd.name}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ComputationFailure, QuadratureError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"densitylab {cmd.name}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"densitylab {cmd.name}: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(summary, file=sys.stderr)
    return EXIT_OK


run = main

if __name__ == "__main__":
    sys.exit(main())
