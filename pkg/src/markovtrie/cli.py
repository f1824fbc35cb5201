"""Command-line front end.

Every subcommand writes CSV (UTF-8, comma separated, header row, '.' as the
decimal point). Lines starting with '#' carry metadata; the timestamp line is
left out under --deterministic, so identical runs give identical bytes.

Exit status: 0 success, 1 validation failure or bad model/plan content,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from contextlib import contextmanager

import numpy as np

from . import __version__
from .markov import ModelError, classify_periodicity, entropy_rate, spectral
from .models import BUILTIN, resolve

SCHEMAS = {
    "validate-model": "key,value  (alphabet, stationary, entropy_rate, lambda1, periodicity)",
    "gf-check": "word,n,convention,N0,N1,dp_N0,dp_N1,max_abs_diff,oracle_match",
    "oracle-check": "model,k,words,n_max,max_abs_diff,pass",
    "trie-size": "n,t_recurrence,t_wordsum,wordsum_bound,n_over_h,ratio",
    "suffix-vs-trie": "n,s_hat,s_stderr,t_exact,gap,gap_over_n  (+ '# summary' line)",
    "periodicity": "kind,key,value  (alpha ratios, classification, Mellin roots)",
    "bk-decay": "k,non_Bk_mass,ratio,two_step_ratio,delta_hat_plus_0.1,ratio_ok,two_step_ok",
    "trace-decay": "k,trace,bound,ok",
}


class PlanError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


class Table:
    def __init__(self, header):
        self.header = list(header)
        self.rows = []
        self.footer = []

    def add(self, *row):
        self.rows.append([_fmt(v) for v in row])

    def render(self, meta) -> str:
        buf = io.StringIO()
        for line in meta:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        for line in self.footer:
            buf.write(f"# {line}\n")
        return buf.getvalue()


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, (int, np.integer)):
        return [int(text)]
    return [int(v) for v in str(text).split(",") if v.strip()]


# -- subcommands ----------------------------------------------------------------

def cmd_validate_model(args, model):
    rep = classify_periodicity(model)
    t = Table(["key", "value"])
    t.add("name", model.name)
    t.add("alphabet", "".join(model.alphabet.symbols))
    t.add("stationary", " ".join(_fmt(v) for v in model.stationary))
    t.add("entropy_rate", entropy_rate(model))
    t.add("lambda1", spectral(model).lambda1_modulus)
    t.add("periodicity", rep.classification)
    return t, 0


def cmd_gf_check(args, model):
    from .occurrence import occurrence_distribution
    from .words import n0_n1_coeffs, occurrence_probs

    if args.word is None:
        raise PlanError("gf-check needs --word")
    t = Table(SCHEMAS["gf-check"].split(","))
    status = 0
    for n in _ints(args.n if args.n is not None else 2):
        p0, p1 = occurrence_probs(model, args.word, n, args.convention)
        d = occurrence_distribution(model, args.word, n, 2, args.convention)
        diff = max(abs(p0 - d.probs[0]), abs(p1 - d.probs[1]))
        ok = diff <= 1e-10
        status |= 0 if ok else 1
        t.add(args.word, n, args.convention, p0, p1, d.probs[0], d.probs[1], diff, ok)
    return t, status


def cmd_oracle_check(args, model):
    import itertools

    from .occurrence import dp_table
    from .words import CONTAINED, n0_n1_coeffs

    kmax = args.max_len or 6
    nmax = _ints(args.n)[-1] if args.n is not None else 30
    t = Table(SCHEMAS["oracle-check"].split(","))
    status = 0
    for k in range(1, kmax + 1):
        words = np.array(list(itertools.product(range(model.m), repeat=k)))
        worst = 0.0
        dp = dp_table(model, words, nmax, 2, CONTAINED)
        for w, table in zip(words.tolist(), dp):
            n0, n1 = n0_n1_coeffs(model, tuple(w), nmax)
            worst = max(worst, float(np.abs(n0 - table[:, 0]).max()),
                        float(np.abs(n1 - table[:, 1]).max()))
        ok = worst <= 1e-10
        status |= 0 if ok else 1
        t.add(model.name, k, len(words), nmax, worst, ok)
    return t, status


def cmd_trie_size(args, model):
    from .triesize import asymptotic_leading, tn_recurrence, tn_wordsum

    grid = _ints(args.n if args.n is not None else args.n_grid or 16)
    tol = args.tol or 1e-9
    table = tn_recurrence(model, max(2, max(grid)))
    t = Table(SCHEMAS["trie-size"].split(","))
    for n in grid:
        ws = tn_wordsum(model, n, tol)
        lead = asymptotic_leading(model, n) if n >= 1 else 0.0
        t.add(n, table.t[n], ws.value, ws.bound, lead, table.t[n] / lead if lead else "nan")
    return t, 0


def cmd_suffix_vs_trie(args, model):
    from .gaps import gap_experiment

    grid = _ints(args.n_grid or args.n or "16,64,256")
    rep = gap_experiment(model, grid, args.samples or 500, args.seed, args.workers)
    t = Table(["n", "s_hat", "s_stderr", "t_exact", "gap", "gap_over_n"])
    for n, s, e, te in zip(rep.n_grid, rep.s_hat, rep.s_stderr, rep.t_exact):
        t.add(n, s, e, te, s - te, (s - te) / n)
    f = rep.fit
    ci = "none" if f.ci is None else f"[{_fmt(f.ci[0])};{_fmt(f.ci[1])}]"
    slope = "none" if f.slope is None else _fmt(f.slope)
    t.footer.append(f"summary: status={f.status} fitted_exponent={slope} ci95={ci} "
                    f"points={f.points} sublinear={_fmt(f.sublinear)}")
    return t, 0


def cmd_periodicity(args, model):
    from .triesize import mellin_diagnostics

    tol = args.tol or 1e-9
    rep = classify_periodicity(model, tol=tol, max_denominator=args.max_den or 10**6)
    t = Table(["kind", "key", "value"])
    for key, val in sorted(rep.alphas.items(), key=lambda kv: str(kv[0])):
        t.add("alpha", "".join(map(str, key)) if isinstance(key, tuple) else key, val)
    t.add("summary", "classification", rep.classification)
    t.add("summary", "common_measure", rep.common_measure if rep.common_measure else "none")
    t.add("summary", "remark_consistent", rep.remark_consistent)
    scan = args.scan or 40.0
    md = mellin_diagnostics(model, (-scan, scan), args.grid or 1e-3)
    t.add("mellin", "lambda_at_0_minus_1", abs(md.lambda_at(0.0) - 1.0))
    t.add("mellin", "predicted_spacing", md.predicted_spacing or "none")
    for r in md.extra_roots:
        t.add("mellin", "root", r)
    t.add("mellin", "aligned", md.aligned())
    return t, 0 if md.aligned() else 1


def cmd_bk_decay(args, model):
    from .gaps import non_Bk_mass

    kmax = args.k_max or 16
    delta = math.sqrt(float(model.transition.max()))
    mass = [non_Bk_mass(model, k) for k in range(1, kmax + 1)]
    t = Table(SCHEMAS["bk-decay"].split(","))
    status = 0
    for k in range(1, kmax + 1):
        cur = mass[k - 1]
        prev = mass[k - 2] if k >= 2 else 0.0
        prev2 = mass[k - 3] if k >= 3 else 0.0
        ratio = cur / prev if prev > 0 else float("nan")
        two = math.sqrt(cur / prev2) if prev2 > 0 else float("nan")
        r_ok = not (ratio > delta + 0.1)
        t_ok = not (two > delta + 0.1)
        status |= 0 if r_ok else 1
        t.add(k, cur, ratio, two, delta + 0.1, r_ok, t_ok)
    return t, status


def cmd_trace_decay(args, model):
    from .words import trace_decay

    kmax = args.k_max or 20
    z = args.z if args.z is not None else 1.0
    lam = spectral(model).lambda1_modulus
    t = Table(SCHEMAS["trace-decay"].split(","))
    status = 0
    for k in range(1, kmax + 1):
        v = trace_decay(model, z, k)
        bound = 2 * lam**k
        ok = abs(v) <= bound + 1e-15
        status |= 0 if ok else 1
        t.add(k, v, bound, ok)
    return t, status


COMMANDS = {
    "validate-model": cmd_validate_model,
    "gf-check": cmd_gf_check,
    "oracle-check": cmd_oracle_check,
    "trie-size": cmd_trie_size,
    "suffix-vs-trie": cmd_suffix_vs_trie,
    "periodicity": cmd_periodicity,
    "bk-decay": cmd_bk_decay,
    "trace-decay": cmd_trace_decay,
}

PLAN_KEYS = {"command", "model_path", "model", "seed", "n", "n_grid", "samples", "len_cap",
             "tol", "scan_range", "scan", "grid", "output_path", "output", "word", "k_max",
             "max_len", "convention", "z", "workers", "max_den", "deterministic"}


def build_parser() -> argparse.ArgumentParser:
    epilog = "CSV columns per subcommand:\n" + "\n".join(
        f"  {k}: {v}" for k, v in SCHEMAS.items())
    epilog += "\n\nBuiltin models: " + ", ".join(BUILTIN)
    p = argparse.ArgumentParser(prog="markovtrie", description=__doc__.splitlines()[0],
                                epilog=epilog,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command")
    for name in COMMANDS:
        s = sub.add_parser(name, help=SCHEMAS[name],
                           epilog=f"CSV columns: {SCHEMAS[name]}")
        s.add_argument("--model", help="builtin name or JSON model file")
        s.add_argument("--plan", help="JSON plan file; explicit flags override its keys")
        s.add_argument("--seed", type=int)
        s.add_argument("--deterministic", action="store_true", default=None)
        s.add_argument("--output", help="write CSV here instead of stdout")
        s.add_argument("--workers", type=int)
        s.add_argument("--word")
        s.add_argument("--n", help="one value or a comma list")
        s.add_argument("--n-grid", dest="n_grid")
        s.add_argument("--samples", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--max-den", dest="max_den", type=int)
        s.add_argument("--scan", type=float, help="half-width of the imaginary window")
        s.add_argument("--grid", type=float)
        s.add_argument("--k-max", dest="k_max", type=int)
        s.add_argument("--max-len", dest="max_len", type=int)
        s.add_argument("--len-cap", dest="len_cap", type=int)
        s.add_argument("--z", type=float)
        s.add_argument("--convention", choices=["contained", "start"])
    return p


def _apply_plan(args, path: str) -> None:
    try:
        with open(path, encoding="utf-8") as fh:
            plan = json.load(fh)
    except OSError as exc:
        raise PlanError(f"cannot read plan {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PlanError(f"plan {path} is not valid JSON: {exc}") from exc
    if not isinstance(plan, dict):
        raise PlanError("plan must be a flat JSON object")
    bad = set(plan) - PLAN_KEYS
    if bad:
        raise PlanError(f"unknown plan keys: {', '.join(sorted(bad))}")
    if plan.get("command") not in (None, args.command):
        raise PlanError(f"plan is for {plan['command']!r}, not {args.command!r}")
    alias = {"model_path": "model", "output_path": "output"}
    for key, val in plan.items():
        if key == "command":
            continue
        if key == "scan_range":
            key, val = "scan", max(abs(float(v)) for v in val)
        dest = alias.get(key, key)
        if getattr(args, dest, None) is None:
            setattr(args, dest, val)


@contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.plan:
            _apply_plan(args, args.plan)
    except PlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    args.seed = 0 if args.seed is None else int(args.seed)
    args.workers = 1 if args.workers is None else int(args.workers)
    args.convention = args.convention or "contained"
    if args.model is None:
        print("error: --model is required", file=sys.stderr)
        return 2
    try:
        model = resolve(args.model)
    except ModelError as exc:
        print(f"error: invalid model: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: cannot load model {args.model}: {exc}", file=sys.stderr)
        return 1
    try:
        table, status = COMMANDS[args.command](args, model)
    except PlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    meta = [f"markovtrie {__version__} {args.command}", f"model: {model.name or args.model}",
            f"seed: {args.seed}"]
    if not args.deterministic:
        meta.append("generated: " + _dt.datetime.now(_dt.timezone.utc).isoformat(
            timespec="seconds"))
    with _sink(args.output) as fh:
        fh.write(table.render(meta))
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
