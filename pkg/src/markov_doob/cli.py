"""Command-line interface: ``markov-doob <command> ...``.

Chains are given either as a ``.stoch`` matrix file, a ``.chain`` file
holding a walk spec (for example ``--walk zd-biased --p 9/10``), or inline
with ``--walk``.  ``--json`` switches every command to machine output, with
exact rationals written as ``"a/b"`` strings.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import shlex
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import doob, fock, harmonic, peaking, spectral
from ._numeric import format_number, parse_number
from .chain import (
    ChainError,
    FiniteStochasticMatrix,
    explore_window,
    parse_matrix,
    serialize_matrix,
)
from .walks import (
    LamplighterElement,
    LatticeWalk,
    biased_walk,
    halfline_chain,
    lamplighter_walk,
    parse_measure,
    simple_walk,
    zd_walk,
)

__all__ = ["CommandReport", "dispatch", "main", "build_parser", "load_chain", "to_jsonable"]

WALKS = ("zd-simple", "zd", "zd-biased", "lamplighter", "halfline")


@dataclasses.dataclass
class CommandReport:
    command: list[str]
    result: dict | None
    warnings: list[str]
    exit_code: int
    text: str = ""


def to_jsonable(x):
    """Exact numbers become ``"a/b"`` strings; containers are converted recursively."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, Fraction):
        return format_number(x)
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        return x if math.isfinite(x) else str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (frozenset, set)):
        return [to_jsonable(v) for v in sorted(x)]
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return to_jsonable(x.item())
    return str(x)


# chain arguments

def _walk_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="walk-spec", add_help=False)
    _add_walk_flags(p)
    return p


def _add_walk_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--walk", choices=WALKS, help="builtin chain")
    p.add_argument("--dim", type=int, default=1, help="lattice dimension")
    p.add_argument("--measure", help="measure file for --walk zd")
    p.add_argument("--p", default="9/10", help="step-right probability for zd-biased")


def _build_walk(ns: argparse.Namespace, base: Path | None = None):
    if ns.measure and ns.walk is None:
        ns.walk = "zd"
    if ns.walk == "zd-simple":
        return simple_walk(ns.dim)
    if ns.walk == "zd":
        if not ns.measure:
            raise ChainError("--walk zd needs --measure")
        path = Path(ns.measure)
        if base is not None and not path.is_absolute():
            path = base / path
        return zd_walk(parse_measure(path.read_text()))
    if ns.walk == "zd-biased":
        return biased_walk(parse_number(ns.p))
    if ns.walk == "lamplighter":
        return lamplighter_walk(ns.dim)
    if ns.walk == "halfline":
        return halfline_chain()
    raise ChainError("no chain given: pass a .stoch/.chain file or --walk")


def load_chain(path: str | None, ns: argparse.Namespace | None = None):
    """Chain from a ``.stoch`` file, a ``.chain`` walk spec, or the ``--walk`` flags."""
    if path is None:
        if ns is None or ns.walk is None:
            raise ChainError("no chain given: pass a .stoch/.chain file or --walk")
        return _build_walk(ns)
    p = Path(path)
    text = p.read_text()
    if p.suffix == ".chain":
        spec, extra = _walk_parser().parse_known_args(shlex.split(text, comments=True))
        if extra:
            raise ChainError(f"{path}: unrecognised walk spec tokens {extra}")
        return _build_walk(spec, p.parent)
    return parse_matrix(text)


def _add_chain(p: argparse.ArgumentParser) -> None:
    p.add_argument("chain", nargs="?", help=".stoch matrix or .chain walk spec")
    _add_walk_flags(p)


def _default_state(chain):
    if isinstance(chain, LatticeWalk):
        return chain.origin
    if getattr(chain, "name", "").startswith("lamplighter"):
        d = int(chain.name.split("=")[1].rstrip(")"))
        return LamplighterElement.identity(d)
    return 0


def _state(chain, key: str | None):
    if key is None:
        return _default_state(chain)
    try:
        s = chain.parse_key(key)
    except (ValueError, ChainError):
        raise ChainError(f"bad state key {key!r}") from None
    if getattr(chain, "finite", False) and not 0 <= s < chain.n_states:
        raise ChainError(f"state {s} out of range")
    return s


def _finite(chain) -> FiniteStochasticMatrix:
    if not getattr(chain, "finite", False):
        raise ChainError("this command needs a finite .stoch matrix")
    return chain


def _window(chain, radius: int | None, root=None):
    if radius is None:
        if getattr(chain, "finite", False):
            return None, None
        raise ChainError("infinite chains need --window")
    root = _default_state(chain) if root is None else root
    w = explore_window(chain, [root], radius)
    return w, {"radius": radius, "root": chain.key(root), "size": len(w)}


# commands

def _cmd_analyze(ns, warnings):
    P = _finite(load_chain(ns.chain, ns))
    c = peaking.classify(P)
    res = {
        "states": P.n_states,
        "exact": P.exact,
        "period": c.period,
        "classes": c.classes,
        "exclusive": c.exclusive,
        "escorted": c.escorted,
        "boundary": c.boundary,
        "multiple_arrival": c.multiple_arrival,
        "arrival_counterexample": (
            None if c.arrival_counterexample is None
            else dict(zip(("s", "k", "n"), c.arrival_counterexample))
        ),
        "is_cycle": c.is_cycle,
    }
    return res


def _cmd_peak(ns, warnings):
    P = _finite(load_chain(ns.chain, ns))
    r = peaking.peaking_witness(P, _state(P, ns.state), ns.depth)
    return {
        "state": r.state,
        "n0": r.n0,
        "witness": f"S_{r.state}{r.state}^({r.n0})",
        "anchor_norm": r.anchor_norm,
        "anchor_norm_truncated": r.anchor_numeric,
        "depth": ns.depth,
        "off_values": {s: {"squared_norm": v.value, "argmax_m": v.argmax, "limit": v.limit}
                       for s, v in r.off_values.items()},
        "margins": r.margins,
        "certified": r.certified,
    }


def _cmd_norm(ns, warnings):
    P = _finite(load_chain(ns.chain, ns))
    poly = fock.parse_polynomial(Path(ns.op).read_text())
    res = {"depth": ns.depth, "degree": poly.degree, "block_size": poly.block_size}
    warnings.append("truncated norms are lower bounds of the full norm")
    if peaking.is_cycle(P):
        norms = {k: fock.truncated_norm(fock.assemble(P, poly, k, ns.depth)) for k in P.states}
        res.update(norm=max(norms.values()), boundary=peaking.NOT_APPLICABLE)
        if ns.per_state:
            res["per_state"] = norms
        return res
    m = peaking.max_modulus_norm(P, poly, ns.depth)
    res.update(norm=m.same_depth_max, escorted_max=m.escorted_max, matched_max=m.full_max,
               gap=m.gap, argmax=m.argmax, max_modulus_holds=m.passed)
    if ns.per_state:
        res["per_state"] = m.per_state
        res["matched_depths"] = m.matched_depths
        res["matched_norms"] = m.matched_norms
    return res


def _cmd_spectral(ns, warnings):
    chain = load_chain(ns.chain, ns)
    i = _state(chain, ns.state)
    est = spectral.spectral_radius_estimate(chain, i, ns.steps)
    res = {
        "state": chain.key(i),
        "steps": ns.steps,
        "radius": est.radius,
        "method": est.method,
        "max_root": est.max_root,
        "slope_radius": est.slope_radius,
        "samples": [{"n": n, "p": p, "root": r} for n, p, r in est.samples],
    }
    if est.method != "perron":
        warnings.append("spectral radius estimated from finitely many returns")
    if ns.steps >= 10:
        g = spectral.green_classify(chain, i, ns.steps)
        res["verdict"] = g.verdict
        res["verdict_reason"] = g.reason
        res["green"] = {"sum_without_n0": g.sums.sum_without_zero,
                        "sum_with_n0": g.sums.sum_with_zero}
    return res


def _cmd_green(ns, warnings):
    chain = load_chain(ns.chain, ns)
    i = _state(chain, ns.state)
    g = spectral.green_classify(chain, i, ns.steps)
    warnings.append("recurrence verdicts are heuristic")
    res = {
        "state": chain.key(i),
        "steps": ns.steps,
        "verdict": g.verdict,
        "reason": g.reason,
        "fitted_rho": g.fitted_rho,
        "fitted_beta": g.fitted_beta,
        "sum_without_n0": g.sums.sum_without_zero,
        "sum_with_n0": g.sums.sum_with_zero,
    }
    if ns.series:
        res["partial_sums_without_n0"] = g.sums.partial_sums(False)
    return res


def _cmd_walk(ns, warnings):
    chain = load_chain(ns.chain, ns)
    i = _state(chain, ns.state)
    exact = chain.exact and not ns.floating
    probs = spectral.return_probabilities(chain, i, ns.steps, exact=exact)
    return {
        "chain": getattr(chain, "name", "matrix"),
        "state": chain.key(i),
        "row": [(chain.key(t), p) for t, p in chain.row(i)],
        "returns": [{"n": n, "p": p} for n, p in enumerate(probs)],
    }


def _read_sigma(path: str, P, Q) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ChainError(f"{path}:{lineno}: expected '<state> <image>'")
        out[P.parse_key(parts[0])] = Q.parse_key(parts[1])
    return out


def _certificate_json(cert: doob.DoobCertificate, P, Q, window_info) -> dict:
    res = {
        "certified": cert.certified,
        "window": window_info or {"size": len(cert.window)},
        "depth": cert.depth,
        "exact": cert.exact,
    }
    if cert.lam is not None:
        res["lambda"] = cert.lam
        res["i0"] = P.key(cert.i0) if cert.i0 is not None else None
        res["n0"] = cert.n0
        res["sigma"] = [[P.key(a), Q.key(b)] for a, b in cert.sigma.items()]
        res["h"] = {P.key(s): v for s, v in cert.h.items()}
    if cert.certified:
        res["verified_edges"] = cert.verified_edges
        res["verified_samples"] = cert.verified_samples
    else:
        res["refutation"] = cert.refutation
        res["witness"] = cert.witness
    return res


def _cmd_doob(ns, warnings):
    if ns.doob_command == "equiv":
        P = load_chain(ns.a)
        Q = load_chain(ns.b)
        window, info = _window(P, ns.window)
        sigma = None
        if ns.sigma:
            sigma = _read_sigma(ns.sigma, P, Q)
        elif not getattr(P, "finite", False):
            if ns.search_sigma:
                raise ChainError("--search-sigma needs finite matrices")
            sigma = lambda x: x  # noqa: E731
            warnings.append("identity state map used for infinite chains")
        cert = doob.certify_doob_equivalence(P, Q, sigma, window, ns.depth, ns.samples, ns.seed)
        warnings.extend(cert.warnings)
        if info:
            warnings.append(f"certificate holds on the explored window of radius {ns.window}")
        return _certificate_json(cert, P, Q, info)

    P = load_chain(ns.chain, ns)
    window, info = _window(P, ns.window)
    h = doob.parse_eigenfunction(Path(ns.h).read_text(), P)
    pair = doob.EigenPair(parse_number(ns.lam), h)
    Q = doob.doob_transform(P, pair, window)
    report = doob.verify_eigenpair(P, h, pair.lam, window)
    res = {"lambda": pair.lam, "residual": report.max_residual, "exact": report.exact}
    if getattr(Q, "finite", False):
        res["matrix"] = serialize_matrix(Q)
        res["rows"] = {i: [(j, p) for j, p in Q.row(i)] for i in Q.states}
    else:
        res["window"] = info
        interior = doob._interior(P, window.states)
        res["rows"] = {P.key(i): [(P.key(j), p) for j, p in Q.row(i)] for i in interior}
        warnings.append("transform rows listed for window states whose row stays in the window")
    return res


def _cmd_harmonic(ns, warnings):
    if ns.harmonic_command == "finite":
        P = _finite(load_chain(ns.chain, ns))
        b = harmonic.finite_harmonic_space(P)
        return {"dimension": b.dimension, "exact": b.exact, "basis": b.vectors,
                "positive": b.positive, "constants": b.contains_constants()}
    walk = load_chain(ns.chain, ns)
    if not isinstance(walk, LatticeWalk):
        raise ChainError("harmonic walk needs a lattice walk (--measure or --walk)")
    direction = tuple(parse_number(c) for c in ns.direction.split(","))
    e = harmonic.minimal_harmonic_root(walk.measure, direction)
    return {"alpha": e.alpha, "phi": e.phi, "base": e.base, "direction": direction,
            "drift": walk.measure.drift}


def _cmd_liouville(ns, warnings):
    walk = load_chain(ns.chain, ns)
    if not isinstance(walk, LatticeWalk):
        raise ChainError("liouville walk needs a lattice walk (--measure or --walk)")
    v = harmonic.strong_liouville_walk_verdict(walk.measure)
    res = {"strong_liouville": v.strong_liouville, "drift": v.drift}
    if v.witness is not None:
        res["witness_alpha"] = v.witness.alpha
        res["witness_base"] = v.witness.base
        res["witness_phi"] = v.witness.phi
    return res


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markov-doob",
        description="Doob transforms, spectral radii, harmonic functions and peaking states "
                    "of stochastic matrices and Markov chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def command(name, func, help, chain=True):
        p = sub.add_parser(name, help=help)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        if chain:
            _add_chain(p)
        p.set_defaults(func=func)
        return p

    command("analyze", _cmd_analyze, "classify states of a finite matrix")

    p = command("peak", _cmd_peak, "peaking witness for an escorted state")
    p.add_argument("--state", required=True)
    p.add_argument("--depth", type=int, default=8)

    p = command("norm", _cmd_norm, "truncated norm of an operator polynomial")
    p.add_argument("--op", required=True, help="polynomial file")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--per-state", action="store_true")

    p = command("spectral", _cmd_spectral, "spectral radius estimate at a state")
    p.add_argument("--state")
    p.add_argument("--steps", type=int, default=200)

    p = command("green", _cmd_green, "Green-function partial sums and recurrence verdict")
    p.add_argument("--state")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--series", action="store_true", help="include the partial sums")

    p = command("walk", _cmd_walk, "transition row and return probabilities of a state")
    p.add_argument("--state")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--floating", action="store_true")

    d = command("doob", _cmd_doob, "Doob transforms and equivalence", chain=False)
    dsub = d.add_subparsers(dest="doob_command", required=True, metavar="action")
    t = dsub.add_parser("transform", help="transform a chain by an eigenpair")
    t.add_argument("--json", action="store_true")
    _add_chain(t)
    t.add_argument("--h", required=True, help="eigenfunction file")
    t.add_argument("--lam", required=True)
    t.add_argument("--window", type=int)
    e = dsub.add_parser("equiv", help="certify Doob equivalence of two chains")
    e.add_argument("--json", action="store_true")
    e.add_argument("a")
    e.add_argument("b")
    e.add_argument("--window", type=int)
    e.add_argument("--depth", type=int, default=6)
    e.add_argument("--samples", type=int, default=2000)
    e.add_argument("--seed", type=int, default=0)
    g = e.add_mutually_exclusive_group()
    g.add_argument("--sigma", help="state map file")
    g.add_argument("--search-sigma", action="store_true")

    h = command("harmonic", _cmd_harmonic, "harmonic functions", chain=False)
    hsub = h.add_subparsers(dest="harmonic_command", required=True, metavar="kind")
    f = hsub.add_parser("finite", help="kernel of P - I")
    f.add_argument("--json", action="store_true")
    _add_chain(f)
    w = hsub.add_parser("walk", help="exponential harmonic along a direction")
    w.add_argument("--json", action="store_true")
    _add_chain(w)
    w.add_argument("--direction", required=True, help="comma-separated vector")

    lv = command("liouville", _cmd_liouville, "strong Liouville verdict", chain=False)
    lsub = lv.add_subparsers(dest="liouville_command", required=True, metavar="kind")
    lw = lsub.add_parser("walk", help="lattice walk verdict")
    lw.add_argument("--json", action="store_true")
    _add_chain(lw)
    return parser


def _render(result, indent: int = 0) -> list[str]:
    lines = []
    pad = "  " * indent
    for k, v in result.items():
        if isinstance(v, dict) and v and len(v) <= 40:
            lines.append(f"{pad}{k}:")
            lines.extend(_render(v, indent + 1))
        elif isinstance(v, str) and "\n" in v:
            lines.append(f"{pad}{k}:")
            lines.extend(pad + "  " + s for s in v.splitlines())
        elif isinstance(v, list) and len(v) > 12:
            head = ", ".join(json.dumps(to_jsonable(x)) for x in v[-3:])
            lines.append(f"{pad}{k}: {len(v)} entries, last: {head} (full list with --json)")
        else:
            lines.append(f"{pad}{k}: {json.dumps(to_jsonable(v))}")
    return lines


def dispatch(argv: Sequence[str]) -> CommandReport:
    argv = list(argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return CommandReport(argv, None, [], int(e.code or 0))
    if getattr(ns, "measure", None) and getattr(ns, "walk", None) is None:
        ns.walk = "zd"
    warnings: list[str] = []
    try:
        result = ns.func(ns, warnings)
    except (ChainError, ValueError, OSError, ArithmeticError) as e:
        return CommandReport(argv, None, warnings, 1, f"error: {e}")
    if getattr(ns, "json", False):
        payload = {"command": argv, "result": to_jsonable(result), "warnings": warnings}
        text = json.dumps(payload, indent=2)
    else:
        text = "\n".join(_render(result) + [f"warning: {w}" for w in warnings])
    return CommandReport(argv, result, warnings, 0, text)


def main(argv: Sequence[str] | None = None) -> int:
    report = dispatch(sys.argv[1:] if argv is None else argv)
    if report.text:
        stream = sys.stdout if report.exit_code == 0 else sys.stderr
        print(report.text, file=stream)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
