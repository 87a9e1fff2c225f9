"""``qccopt`` command line.

Exit codes: 0 success, 1 usage error, 2 input or parse error, 3 numerical
failure.  Failures print a single ``error: <kind>: <reason>`` line on stderr.
"""

import argparse
import configparser
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import _bits
from . import generators as gen
from . import iqcc
from . import operator as qop
from . import oracle
from . import sympoly
from .errors import ContractViolation, HamiltonianParseError, NumericalError, QCCError
from .optimizer import minimize
from .pauli import PauliWord
from .truncated import fn_objective, sweep_fn
from .validation import check_amplitudes, check_reference, format_reference

log = logging.getLogger("qccopt")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(x):
    return f"{x:.12g}"


def _round(obj):
    """Floats to 12 significant digits, recursively (keeps JSON reports stable)."""
    if isinstance(obj, float):
        return float(fmt(obj)) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round(obj.item())
    return obj


def write_json(report, path):
    text = json.dumps(_round(report), indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


# -- Hamiltonian files ---------------------------------------------------------

def read_operator(path):
    """Text format or JSON ``{"n_qubits": n, "terms": [[coef, word], ...]}``."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
            n = int(data["n_qubits"])
            pairs = [(float(c), PauliWord.from_text(w, n)) for c, w in data["terms"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise HamiltonianParseError(f"bad JSON operator: {exc}", None, str(path)) from None
        return qop.QubitOperator.from_words(n, pairs)
    return qop.parse(text.splitlines(), path=str(path))


def operator_json(op):
    return {"n_qubits": op.n_qubits,
            "terms": [[c, w.to_text()] for c, w in
                      ((c, PauliWord(op.n_qubits, x, z, (x & z).bit_count()))
                       for (x, z), c in op.terms.items())]}


# -- shared helpers ------------------------------------------------------------

def _hamiltonian(args):
    if not args.hamiltonian:
        raise UsageError("--hamiltonian is required")
    h = read_operator(args.hamiltonian)
    ref = check_reference(args.reference, h.n_qubits)
    return h, ref


def _ranked_pool(h, ref, args, m=None):
    pool = gen.rank(gen.propose_generators(h, ref), getattr(args, "ranking", "arctan"))
    if m is None:
        return pool, 0
    return gen.select(pool, m, getattr(args, "selection", "extend"))


def _parse_amplitudes(spec, m):
    """Comma/space separated numbers, a whitespace file, or an ``optimize`` JSON report."""
    p = Path(spec)
    if p.exists():
        text = p.read_text(encoding="utf-8")
        if text.lstrip().startswith("{"):
            values = json.loads(text)["t_opt"]
        else:
            values = [float(v) for v in text.replace(",", " ").split()]
    else:
        values = [float(v) for v in spec.replace(",", " ").split()]
    return check_amplitudes(values, m)


def _generator_rows(pool):
    rows = []
    for i, w in enumerate(pool.generators):
        rows.append({"index": i, "generator": w.to_text(), "g": float(pool.grads[i]),
                     "E_k": float(pool.diag_energies[i]), "D": float(pool.gaps[i]),
                     "r": None if pool.rankings is None else float(pool.rankings[i])})
    return rows


def _print_table(header, rows, out):
    cells = [[fmt(v) if isinstance(v, float) else str(v) for v in r] for r in rows]
    widths = [max([len(h)] + [len(c[i]) for c in cells]) for i, h in enumerate(header)]
    print("  ".join(h.rjust(w) for h, w in zip(header, widths)), file=out)
    for c in cells:
        print("  ".join(v.rjust(w) for v, w in zip(c, widths)), file=out)


def _base_report(command, h, ref):
    return {"command": command, "n_qubits": h.n_qubits, "n_terms": len(h),
            "reference": format_reference(ref, h.n_qubits)}


# -- subcommands ---------------------------------------------------------------

def cmd_rank(args, out):
    h, ref = _hamiltonian(args)
    pool, _ = _ranked_pool(h, ref, args, args.generators)
    rows = _generator_rows(pool)
    print(f"E0 {fmt(pool.e0)}", file=out)
    _print_table(["index", "generator", "g", "E_k", "D", "r"],
                 [[r["index"], r["generator"], r["g"], r["E_k"], r["D"], r["r"]] for r in rows], out)
    report = _base_report("rank", h, ref)
    report.update(e0=pool.e0, mode=args.ranking, generators=rows)
    return report


def cmd_dha(args, out):
    h, ref = _hamiltonian(args)
    pool, _ = _ranked_pool(h, ref, args, args.generators)
    sol = gen.dha_solve(pool)
    print(f"E_DHA {fmt(sol.energy)}", file=out)
    print(f"E0 {fmt(pool.e0)}", file=out)
    _print_table(["index", "generator", "C", "t"],
                 [[i, w.to_text(), float(sol.c[i]), float(sol.t[i])]
                  for i, w in enumerate(pool.generators)], out)
    report = _base_report("dha", h, ref)
    report.update(e0=pool.e0, energy=sol.energy, iterations=sol.iterations,
                  generators=[w.to_text() for w in pool.generators],
                  c=sol.c.tolist(), t=sol.t.tolist())
    return report


def cmd_optimize(args, out):
    h, ref = _hamiltonian(args)
    pool, adjust = _ranked_pool(h, ref, args, args.generators)
    k = len(pool) if args.order is None else min(args.order, len(pool))
    t0 = gen.dha_solve(pool).t if args.warm_start == "dha" else np.zeros(len(pool))
    if args.functional == "fn":
        if args.cap is None:
            raise UsageError("--functional fn needs --cap")
        objective, n_terms = fn_objective(h, pool, args.cap, ref), None
    else:
        ansatz = sympoly.compile(h, pool, k, max_terms=args.max_terms)
        objective, n_terms = (lambda t: sympoly.energy_and_gradient(ansatz, t)), ansatz.n_terms

    def progress(i, e, gnorm):
        print(f"eval {i} energy {fmt(e)} grad {fmt(gnorm)}", file=sys.stderr)

    res = minimize(objective, t0, grad_tol=args.grad_tol, step_tol=args.step_tol, max_evals=args.max_evals,
                   progress=progress if args.progress else None)
    print(f"e_opt {fmt(res.e_opt)}", file=out)
    print(f"evals {res.evals} converged {str(res.converged).lower()}", file=out)
    _print_table(["index", "generator", "t_opt"],
                 [[i, w.to_text(), float(res.t_opt[i])] for i, w in enumerate(pool.generators)],
                 out)
    report = _base_report("optimize", h, ref)
    report.update(order=k, selection_adjustment=adjust, e0=pool.e0, e_opt=res.e_opt,
                  evals=res.evals, converged=res.converged, message=res.message,
                  grad_norm=res.grad_norm, generators=[w.to_text() for w in pool.generators],
                  t_opt=res.t_opt.tolist(), functional=args.functional,
                  cap=args.cap, n_terms_sympoly=n_terms)
    if not res.converged:
        report["_exit"] = (EXIT_NUMERIC, f"optimizer did not converge: {res.message}")
    return report


def _fn_amplitudes(args, pool):
    if args.amplitudes:
        return _parse_amplitudes(args.amplitudes, len(pool)), "given"
    if args.seed is not None:
        rng = np.random.default_rng(args.seed)
        return rng.uniform(-np.pi, np.pi, len(pool)), "random"
    return gen.dha_solve(pool).t, "dha"


def cmd_fn_sweep(args, out):
    h, ref = _hamiltonian(args)
    pool, _ = _ranked_pool(h, ref, args, args.generators)
    t, source = _fn_amplitudes(args, pool)
    try:
        caps = [int(c) for c in args.caps.split(",") if c.strip()]
    except ValueError:
        raise UsageError(f"--caps expects comma separated integers, got {args.caps!r}") from None
    if not caps:
        raise UsageError("--caps is empty")
    rows = sweep_fn(h, pool, t, caps, ref)
    fields = ["cap", "energy", "final_dim", "cumulative_norm_loss", "seconds"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([fmt(r[f]) if isinstance(r[f], float) else r[f] for f in fields])
    out.write(buf.getvalue())
    report = _base_report("fn-sweep", h, ref)
    report.update(amplitude_source=source, t=t.tolist(),
                  generators=[w.to_text() for w in pool.generators],
                  rows=[{f: r[f] for f in fields if f != "seconds"} for r in rows])
    return report


def _parse_words(spec, n):
    return [PauliWord.from_text(s.strip(), n) for s in spec.split(",") if s.strip()]


def cmd_dress(args, out):
    h, ref = _hamiltonian(args)
    if args.report:
        data = json.loads(Path(args.report).read_text(encoding="utf-8"))
        words = [PauliWord.from_text(s, h.n_qubits) for s in data["generators"]]
        t = check_amplitudes(data["t_opt"], len(words))
    else:
        if args.words:
            words = _parse_words(args.words, h.n_qubits)
        else:
            words = list(_ranked_pool(h, ref, args, args.generators)[0].generators)
        if not args.amplitudes:
            raise UsageError("dress needs --report or --amplitudes")
        t = _parse_amplitudes(args.amplitudes, len(words))
    for w in words:
        gen.require_generator(w)
    dressed = qop.dress_sequence(h, words, t)
    comp = qop.compress(dressed, args.threshold)
    text = comp.operator.to_text()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    energy = qop.matrix_element(dressed, ref, ref)
    print(f"energy {fmt(energy)} terms {len(comp.operator)} dropped_l1 {fmt(comp.removed_l1)}",
          file=sys.stderr if not args.output else out)
    report = _base_report("dress", h, ref)
    report.update(generators=[w.to_text() for w in words], amplitudes=t.tolist(),
                  energy=energy, dressed_terms=len(comp.operator), threshold=args.threshold,
                  removed_l1=comp.removed_l1, removed_weight=comp.removed_weight)
    return report


def _schedule_from_args(args):
    if args.config:
        sched = iqcc.IqccSchedule.from_config(args.config)
        sched.iterations = [
            iqcc.IterationSpec(args.generators or s.m,
                               s.k if args.order is None else args.order,
                               s.drop_threshold if args.threshold is None else args.threshold)
            for s in sched.iterations]
        if args.iterations is not None:
            sched.max_iterations = args.iterations
    else:
        sched = iqcc.IqccSchedule.repeat(
            args.generators or 2, 2 if args.order is None else args.order,
            10 if args.iterations is None else args.iterations,
            iqcc.DEFAULT_DROP_THRESHOLD if args.threshold is None else args.threshold)
    if args.energy_tol is not None:
        sched.energy_tol = args.energy_tol
    return sched


def _config_globals(args):
    """Fill unset global flags from the config's ``[global]`` section."""
    if not args.config:
        return
    cp = configparser.ConfigParser()
    with open(args.config, encoding="utf-8") as fh:
        cp.read_file(fh)
    if not cp.has_section("global"):
        return
    g = cp["global"]
    for key in ("hamiltonian", "reference", "json"):
        if getattr(args, key) is None and key in g:
            setattr(args, key, g[key])
    if args.threads is None and "threads" in g:
        args.threads = g.getint("threads")
        _bits.set_num_threads(args.threads)


def cmd_iqcc(args, out):
    _config_globals(args)
    h, ref = _hamiltonian(args)
    sched = _schedule_from_args(args)
    observables = {}
    for item in args.observable or []:
        name, sep, path = item.partition("=")
        if not sep:
            raise UsageError(f"--observable expects name=path, got {item!r}")
        observables[name] = read_operator(path)
    res = iqcc.run(h, ref, sched, observables, warm_start=args.warm_start, debug=args.debug,
                   snapshot_dir=args.snapshots)
    names = sorted(observables)
    _print_table(["iteration", "energy", "max_ranking", "terms"] + names + ["seconds"],
                 [[r.iteration, r.energy, r.max_ranking, r.hamiltonian_terms]
                  + [r.observable_expectations[n] for n in names] + [r.wall_seconds]
                  for r in res.trace], out)
    print(f"stop {res.stop_reason}", file=out)
    report = _base_report("iqcc", h, ref)
    report.update(stop_reason=res.stop_reason, energy=res.energy, trace=[
        {"iteration": r.iteration, "energy": r.energy, "max_ranking": r.max_ranking,
         "hamiltonian_terms": r.hamiltonian_terms, "e_opt": r.e_opt, "order": r.order,
         "generators": [w.to_text() for w in r.generators], "amplitudes": list(r.amplitudes),
         "drop_threshold": r.drop_threshold, "removed_l1": r.removed_l1,
         "observable_expectations": dict(sorted(r.observable_expectations.items()))}
        for r in res.trace])
    return report


def cmd_exact(args, out):
    h, ref = _hamiltonian(args)
    e0, _ = oracle.dense_ground(h, cap=oracle.DENSE_QUBIT_CAP)
    print(f"ground_energy {fmt(e0)}", file=out)
    report = _base_report("exact", h, ref)
    report.update(ground_energy=e0)
    if args.amplitudes:
        words = (_parse_words(args.words, h.n_qubits) if args.words
                 else list(_ranked_pool(h, ref, args, args.generators)[0].generators))
        t = _parse_amplitudes(args.amplitudes, len(words))
        e = oracle.dense_energy(h, words, t, ref)
        print(f"qcc_energy {fmt(e)}", file=out)
        report.update(qcc_energy=e, generators=[w.to_text() for w in words], t=t.tolist())
    return report


def cmd_convert(args, out):
    src = args.input or args.hamiltonian
    if not src:
        raise UsageError("convert needs --input or --hamiltonian")
    op = read_operator(src)
    fmt_out = args.format or ("json" if args.output and args.output.endswith(".json") else "text")
    text = (json.dumps(operator_json(op), indent=2) + "\n") if fmt_out == "json" else op.to_text()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return {"command": "convert", "n_qubits": op.n_qubits, "n_terms": len(op), "format": fmt_out}


# -- argument parsing ----------------------------------------------------------

def _global_options(suppress):
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    g.add_argument("--hamiltonian", help="Hamiltonian file (text or JSON)", **kw)
    g.add_argument("--reference", help="reference bitstring, qubit n-1 first (default all zeros)",
                   **kw)
    g.add_argument("--threads", type=int, help="worker threads for parallel stages", **kw)
    g.add_argument("--seed", type=int, help="seed for randomised inputs", **kw)
    g.add_argument("--json", help="write a JSON report here", **kw)
    g.add_argument("-v", "--verbose", action="store_true", **kw)
    return common


def build_parser():
    # sub-level copies suppress their defaults so flags given before the
    # subcommand survive
    top, common = _global_options(False), _global_options(True)
    p = _Parser(prog="qccopt", description="QCC amplitude optimisation toolkit",
                parents=[top])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(func=func)
        return sp

    def pool_opts(sp, default_m=None):
        sp.add_argument("--generators", type=int, default=default_m,
                        help="keep the top M ranked generators")
        sp.add_argument("--ranking", choices=("arctan", "dha"), default="arctan")
        sp.add_argument("--selection", choices=("extend", "shrink"), default="extend")

    sp = add("rank", cmd_rank, "rank candidate generators")
    pool_opts(sp)

    sp = add("dha", cmd_dha, "diagonal Hessian approximation")
    pool_opts(sp)

    sp = add("optimize", cmd_optimize, "minimise E[K] over amplitudes")
    pool_opts(sp, 8)
    sp.add_argument("--order", type=int, default=2, help="order K (omit value with --exact)")
    sp.add_argument("--exact", dest="order", action="store_const", const=None,
                    help="use K = M")
    sp.add_argument("--warm-start", choices=("zero", "dha"), default="zero")
    sp.add_argument("--grad-tol", type=float, default=1e-8)
    sp.add_argument("--step-tol", type=float, default=1e-12)
    sp.add_argument("--max-evals", type=int)
    sp.add_argument("--max-terms", type=int, default=sympoly.DEFAULT_MAX_TERMS)
    sp.add_argument("--progress", action="store_true", help="progress lines on stderr")
    sp.add_argument("--functional", choices=("sympoly", "fn"), default="sympoly",
                    help="E[K] (default) or the truncated F[N] (not smooth)")
    sp.add_argument("--cap", type=int, help="N for --functional fn")

    sp = add("fn-sweep", cmd_fn_sweep, "F[N] over a list of caps, CSV out")
    pool_opts(sp, 8)
    sp.add_argument("--caps", "--cap", dest="caps", required=True, help="e.g. 64,128,256")
    sp.add_argument("--amplitudes", help="numbers, a file, or an optimize JSON report")

    sp = add("dress", cmd_dress, "dress the Hamiltonian with given rotations")
    pool_opts(sp, 8)
    sp.add_argument("--report", help="optimize JSON report supplying generators and t_opt")
    sp.add_argument("--words", help="comma separated generator words")
    sp.add_argument("--amplitudes")
    sp.add_argument("--threshold", type=float, default=0.0, help="drop |c| below this")
    sp.add_argument("--output", help="dressed Hamiltonian file (default stdout)")

    sp = add("iqcc", cmd_iqcc, "run iterative QCC")
    sp.add_argument("--config", help="schedule file")
    sp.add_argument("--generators", type=int, help="generators per iteration")
    sp.add_argument("--order", type=int, help="order per iteration")
    sp.add_argument("--threshold", type=float, help="drop threshold per iteration")
    sp.add_argument("--iterations", type=int)
    sp.add_argument("--energy-tol", type=float)
    sp.add_argument("--warm-start", choices=("zero", "dha"), default="zero")
    sp.add_argument("--observable", action="append", metavar="NAME=PATH")
    sp.add_argument("--snapshots", help="directory for per-iteration Hamiltonians")
    sp.add_argument("--debug", action="store_true", help="check dressing against E_opt")

    sp = add("exact", cmd_exact, "dense ground energy and exact QCC energy")
    pool_opts(sp, 8)
    sp.add_argument("--words")
    sp.add_argument("--amplitudes")

    sp = add("convert", cmd_convert, "rewrite an operator file canonically")
    sp.add_argument("--input")
    sp.add_argument("--output")
    sp.add_argument("--format", choices=("text", "json"))
    return p


def _fail(code, kind, reason):
    reason = " ".join(str(reason).split())
    print(f"error: {kind}: {reason}", file=sys.stderr)
    return code


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None:
        if args.threads < 1:
            return _fail(EXIT_USAGE, "usage", "--threads must be positive")
        _bits.set_num_threads(args.threads)
    try:
        report = args.func(args, out)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except HamiltonianParseError as exc:
        return _fail(EXIT_INPUT, "parse", exc)
    except NumericalError as exc:
        return _fail(EXIT_NUMERIC, "numerical", exc)
    except (OSError, ContractViolation, QCCError, ValueError, KeyError, TypeError) as exc:
        return _fail(EXIT_INPUT, "input", exc)
    code, reason = report.pop("_exit", (EXIT_OK, None))
    if args.json:
        report["threads"] = _bits.get_num_threads()
        write_json(report, args.json)
    if code != EXIT_OK:
        return _fail(code, "numerical", reason)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
