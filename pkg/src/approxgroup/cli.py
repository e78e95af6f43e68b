"""Command-line driver: every command writes a self-verifying JSON (or CSV) report.

Exit status: 0 when every embedded assertion passed, 1 on an assertion
failure, 2 on a usage error, 3 when a size cap was exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from . import besicovitch as bes
from .approx.blocks import standard_block_subgroups
from .approx.finders import STRATEGIES
from .approx.lemmas import intersect_with_subgroup, lift_fiber_bound
from .approx.pipeline import diagonalizable_control, normalizer_quotient_bound
from .errors import ApproxGroupError, CapExceeded, InvalidSpec
from .families import build
from .growth import growth_lower_exponent, growth_profile
from .jordan import (BRUTEFORCE_MAX_ORDER, as_group, bruteforce_abelian_index,
                     check_cubic_inequality, jordan_abelian_subgroup, proper_compositions)
from .linalg import EPS_COMM, EPS_SPEC, hs_distance
from .serialization import (digest, element_to_json, load_set, set_from_json,
                            set_to_json, to_plain)
from .sets import (DEFAULT_CAP, DEFAULT_EPS_EQ, ControlCertificate, MatrixSet, certify_approximate,
                   power_set, product_set, to_tolerant, verify_control)

log = logging.getLogger("approxgroup")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
LEMMA_ALIASES = {"2.3": "cubic", "3.3": "intersection", "3.4": "fiber-lift", "comp-gap": "scalar-gap"}


@dataclass
class RunConfig:
    command: str
    family: str | None = None
    input: str | None = None
    which: str = "auto"
    radius: int | None = None
    tolerant: bool = False
    eps_eq: float = DEFAULT_EPS_EQ
    eps_comm: float = EPS_COMM
    eps_spec: float = EPS_SPEC
    eps_block: float = 1e-6
    cap: int = DEFAULT_CAP
    seed: int = 0
    out: str | None = None
    format: str = "json"
    strategy: str = "auto"
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        for name in ("eps_eq", "eps_comm", "eps_spec", "eps_block"):
            if not getattr(self, name) > 0:
                raise InvalidSpec(f"{name} must be positive")
        if self.cap < 1:
            raise InvalidSpec("cap must be positive")


class Assertions:
    def __init__(self):
        self.items: list[dict] = []

    def check(self, name: str, ok: bool, **detail) -> bool:
        self.items.append({"name": name, "passed": bool(ok), **detail})
        return bool(ok)

    @property
    def passed(self) -> bool:
        return all(i["passed"] for i in self.items)


# -- set resolution --------------------------------------------------------------

def resolve_set(cfg: RunConfig) -> MatrixSet:
    if cfg.input:
        s = load_set(cfg.input)
    elif cfg.family:
        fam = build(cfg.family, eps_eq=cfg.eps_eq)
        which = cfg.which
        if which == "auto":
            which = "closure" if fam.closure is not None else "generators"
        if which == "closure":
            if fam.closure is None:
                raise InvalidSpec(f"{cfg.family} has no finite closure within the cap")
            s = fam.closure.base
        elif which == "generators":
            s = fam.generators
        elif which == "ball":
            from .growth import word_ball
            s = word_ball(fam.generators, cfg.radius or 1, cfg.cap)
        else:
            raise InvalidSpec(f"unknown set selector {which!r}")
    else:
        raise InvalidSpec("give --family or --input")
    if cfg.tolerant and s.regime.exact:
        s = to_tolerant(s, cfg.eps_eq).canonical()
    return s


def _matrix_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


# -- commands ---------------------------------------------------------------------

def cmd_certify(cfg: RunConfig, chk: Assertions) -> dict:
    a = resolve_set(cfg)
    cert = certify_approximate(a)
    chk.check("cover re-verifies", cert.recheck(a))
    return {"A_size": len(a), "A2_size": cert.square_size, "K_upper": cert.K_upper,
            "cover": set_to_json(cert.cover)}


def cmd_control(cfg: RunConfig, chk: Assertions) -> dict:
    a = resolve_set(cfg)
    path = cfg.extra.get("b_input")
    if not path:
        raise InvalidSpec("control needs --b-input")
    b = load_set(path)
    if cfg.tolerant and b.regime.exact:
        b = to_tolerant(b, cfg.eps_eq)
    res = verify_control(a, b)
    if isinstance(res, ControlCertificate):
        chk.check("control re-verifies", res.recheck(a))
        return {"A_size": len(a), "B_size": len(b), "constant": res.constant,
                "cover": set_to_json(res.cover), "ratio": res.ratio}
    chk.check("control found", False, uncovered=len(res.uncovered))
    return {"A_size": len(a), "B_size": len(b), "uncovered": [element_to_json(g) for g in res.uncovered]}


def cmd_jordan(cfg: RunConfig, chk: Assertions) -> dict:
    a = resolve_set(cfg)
    g = as_group(a)
    chk.check("input is a closed group", g.closed)
    if not g.closed:
        return {"order": len(a)}
    res = jordan_abelian_subgroup(g, bruteforce_below=cfg.extra.get("bruteforce_below", 64),
                                  eps_eq=cfg.eps_eq, eps_spec=cfg.eps_spec, eps_comm=cfg.eps_comm)
    out = {"order": len(g), "abelian_order": len(res.H), "index": res.index, "trace": res.trace}
    chk.check("index divides order", len(g) % len(res.H) == 0)
    if len(g) <= BRUTEFORCE_MAX_ORDER:
        best = bruteforce_abelian_index(g)
        out["bruteforce_index"] = best
        chk.check("index at least the optimum", res.index >= best)
    return out


def cmd_decompose(cfg: RunConfig, chk: Assertions) -> dict:
    a = resolve_set(cfg)
    rep = diagonalizable_control(a, strategy=cfg.strategy, eps_block=cfg.eps_block,
                                 eps_comm=cfg.eps_comm, eps_spec=cfg.eps_spec, cap=cfg.cap)
    chk.check("steps at most n", len(rep.steps) <= a.dim, steps=len(rep.steps))
    chk.check("B simultaneously diagonal", rep.diagonalizable, off_diagonal=rep.off_diagonal)
    chk.check("B abelian", rep.abelian)
    ok_control = isinstance(rep.control, ControlCertificate)
    chk.check("control certificate found", ok_control)
    out: dict[str, Any] = {"A_size": len(a), "steps": rep.steps, "measured": rep.measured,
                           "Q": _matrix_json(rep.Q), "H": rep.H.describe(), "B": set_to_json(rep.B)}
    if ok_control:
        chk.check("control re-verifies", rep.control.recheck(a))
        out["cover"] = set_to_json(rep.control.cover)
        q = normalizer_quotient_bound(a, rep, cfg.cap)
        out["quotient"] = q.to_json()
        if q.displayed_ok is not None:
            chk.check("quotient times torus part within the cube", q.displayed_ok)
        chk.check("quotient within K^2 |A| / |A^2 ∩ S|", q.bound_ok)
    return out


def cmd_growth(cfg: RunConfig, chk: Assertions) -> dict:
    fam_set = resolve_set(RunConfig(**{**asdict(cfg), "which": "generators"})) \
        if cfg.family else resolve_set(cfg)
    prof = growth_profile(fam_set, cfg.radius or 10, cfg.cap,
                          with_ratios=not cfg.extra.get("no_ratios", False))
    sizes_ok = all(x <= y for x, y in zip(prof.sizes, prof.sizes[1:]))
    chk.check("sizes nondecreasing", sizes_ok)
    all_s = prof.extra["all_sizes"]
    sub = all(all_s[i + j] <= all_s[i] * all_s[j] for i in range(len(all_s))
              for j in range(len(all_s) - i))
    chk.check("sizes submultiplicative", sub)
    out: dict[str, Any] = {"rows": prof.csv_rows(), "truncated": prof.truncated}
    try:
        alpha, resid = growth_lower_exponent(prof)
        out.update(alpha=alpha, residual=resid)
    except ApproxGroupError as exc:
        out["alpha"] = f"{type(exc).__name__}: {exc}"
    return out


def cmd_besicovitch(cfg: RunConfig, chk: Assertions) -> dict:
    mode = cfg.extra.get("mode", "hexagon")
    if mode == "hexagon":
        h = bes.hexagon_witness()
        v = bes.check_weak_besicovitch(h)
        chk.check("hexagon is a counter-witness", isinstance(v, bes.CounterWitness))
        pt = getattr(v, "point", None)
        return {"verdict": v.kind, "balls": len(h), "config": h.to_json(),
                "common_point": None if pt is None else [float(x) for x in pt]}
    if mode == "trial":
        d, trials = cfg.extra.get("dim", 2), cfg.extra.get("trials", 1000)
        rep = bes.upper_bound_property_test(d, trials, cfg.seed)
        chk.check("no violations", rep["violations"] == 0, violations=rep["violations"])
        return rep
    if mode == "matrix-bound":
        n = cfg.extra.get("n", 2)
        return {"n": n, "bound": str(bes.matrix_space_bound(n))}
    raise InvalidSpec(f"unknown besicovitch mode {mode!r}")


def _lemma_cubic(cfg: RunConfig, chk: Assertions) -> dict:
    max_n = cfg.extra.get("max_n", 12)
    count = fails = 0
    for n in range(2, max_n + 1):
        for parts in proper_compositions(n):
            count += 1
            fails += not check_cubic_inequality(n, parts)
    chk.check("every composition satisfies the inequality", fails == 0, failures=fails)
    return {"max_n": max_n, "compositions": count, "failures": fails}


def _lemma_scalar_gap(cfg: RunConfig, chk: Assertions) -> dict:
    max_n = cfg.extra.get("max_n", 50)
    worst = math.inf
    for n in range(2, max_n + 1):
        for r in range(1, n):
            lam = np.exp(2j * np.pi * r / n)
            margin = hs_distance(lam * np.eye(n), np.eye(n)) - 2 / math.sqrt(n)
            worst = min(worst, margin)
    chk.check("margin exceeds 1e-12", worst > 1e-12, margin=worst)
    return {"max_n": max_n, "worst_margin": worst}


def _lemma_intersection(cfg: RunConfig, chk: Assertions) -> dict:
    a = resolve_set(cfg)
    k_const = certify_approximate(a).K_upper
    powers = {j: power_set(a, j, cfg.cap) for j in (2, 3, 4, 6)}
    rows = []
    for name, h in standard_block_subgroups(a.dim, cfg.eps_block).items():
        for k in (3, 4, 6):
            rec = intersect_with_subgroup(a, k_const, h, k, powers, cfg.cap)
            rows.append({"H": name, **rec.to_json()})
            chk.check(f"{name} k={k}", rec.holds)
    return {"A_size": len(a), "K_upper": k_const, "rows": rows}


def _lemma_fiber_lift(cfg: RunConfig, chk: Assertions) -> dict:
    from .approx.finders import central_classes

    a = resolve_set(cfg)
    rng = np.random.default_rng(cfg.seed)
    a2 = product_set(a, a, cfg.cap)
    cube = product_set(a2, a, cfg.cap)
    reps2 = [a2[c[0]] for c in central_classes(a2)]
    targets = {"image": list(a), "identity": [a.identity()]}
    for t in range(cfg.extra.get("random_sets", 8)):
        size = int(rng.integers(1, len(reps2) + 1))
        pick = rng.choice(len(reps2), size=size, replace=False)
        targets[f"random{t}"] = [reps2[int(i)] for i in sorted(pick)]
    rows = []
    for name, xs in targets.items():
        rec = lift_fiber_bound(a, xs, cube)
        rows.append({"X": name, **rec.to_json()})
        chk.check(f"X={name}", rec.holds and rec.chain_ok)
    return {"A_size": len(a), "rows": rows}


LEMMAS: dict[str, Callable[[RunConfig, Assertions], dict]] = {
    "cubic": _lemma_cubic, "scalar-gap": _lemma_scalar_gap,
    "intersection": _lemma_intersection, "fiber-lift": _lemma_fiber_lift}


def cmd_verify_lemma(cfg: RunConfig, chk: Assertions) -> dict:
    name = cfg.extra.get("lemma")
    name = LEMMA_ALIASES.get(name, name)
    if name not in LEMMAS:
        raise InvalidSpec(f"unknown check {cfg.extra.get('lemma')!r}")
    return {"check": name, **LEMMAS[name](cfg, chk)}


COMMANDS: dict[str, Callable[[RunConfig, Assertions], dict]] = {
    "certify": cmd_certify, "control": cmd_control, "jordan": cmd_jordan,
    "decompose": cmd_decompose, "growth": cmd_growth, "besicovitch": cmd_besicovitch,
    "verify-lemma": cmd_verify_lemma}


def execute(cfg: RunConfig) -> tuple[dict, int]:
    """Run one command and build its report (config, results, assertions, digest)."""
    cfg.validate()
    chk = Assertions()
    t0 = time.perf_counter()
    results = to_plain(COMMANDS[cfg.command](cfg, chk))
    report = {"config": to_plain(asdict(cfg)), "results": results, "assertions": chk.items,
              "passed": chk.passed, "digest": digest(results),
              "elapsed_seconds": round(time.perf_counter() - t0, 3)}
    return report, EXIT_OK if chk.passed else EXIT_FAIL


def verify_report(path: str) -> tuple[dict, int]:
    """Re-run the command recorded in a report and compare digests."""
    with open(path) as fh:
        old = json.load(fh)
    raw = dict(old["config"])
    raw["out"] = None
    cfg = RunConfig(**raw)
    new, _ = execute(cfg)
    chk = Assertions()
    chk.check("digest reproduced", new["digest"] == old["digest"],
              recorded=old["digest"], recomputed=new["digest"])
    chk.check("assertions still pass", new["passed"] == old["passed"] and new["passed"])
    if cfg.command == "decompose" and "cover" in old["results"]:
        a = resolve_set(cfg)
        b = set_from_json(old["results"]["B"])
        x = set_from_json(old["results"]["cover"])
        if a.regime.exact is False:
            b, x = to_tolerant(b, cfg.eps_eq), to_tolerant(x, cfg.eps_eq)
        cert = ControlCertificate(b, x, len(b) / len(a))
        chk.check("stored control certificate re-verifies", cert.recheck(a))
    results = {"report": path, "checks": chk.items}
    out = {"config": {"command": "verify-report", "report": path}, "results": results,
           "assertions": chk.items, "passed": chk.passed, "digest": digest(results)}
    return out, EXIT_OK if chk.passed else EXIT_FAIL


# -- argument parsing ----------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", help="family string, e.g. sym:3, heis:5, randpair:2:42")
    p.add_argument("--input", help="JSON matrix-set file")
    p.add_argument("--which", default="auto", choices=["auto", "closure", "generators", "ball"])
    p.add_argument("--radius", type=int)
    p.add_argument("--tolerant", action="store_true", help="render exact sets densely")
    p.add_argument("--eps-eq", type=float, default=DEFAULT_EPS_EQ)
    p.add_argument("--eps-comm", type=float, default=EPS_COMM)
    p.add_argument("--eps-spec", type=float, default=EPS_SPEC)
    p.add_argument("--eps-block", type=float, default=1e-6)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.add_argument("--strategy", default="auto", choices=list(STRATEGIES))
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="approxgroup", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("certify", "jordan", "decompose", "growth"):
        _add_common(sub.add_parser(name))
    p = sub.add_parser("control")
    _add_common(p)
    p.add_argument("--b-input", required=True)
    p = sub.add_parser("besicovitch")
    _add_common(p)
    p.add_argument("mode", choices=["hexagon", "trial", "matrix-bound"])
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--n", type=int, default=2)
    p = sub.add_parser("verify-lemma")
    _add_common(p)
    p.add_argument("lemma", choices=sorted(set(LEMMAS) | set(LEMMA_ALIASES)))
    p.add_argument("--max-n", type=int)
    p.add_argument("--random-sets", type=int, default=8)
    p = sub.add_parser("verify-report")
    p.add_argument("report")
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    extra: dict[str, Any] = {}
    if ns.command == "control":
        extra["b_input"] = ns.b_input
    if ns.command == "besicovitch":
        extra.update(mode=ns.mode, dim=ns.dim, trials=ns.trials, n=ns.n)
    if ns.command == "verify-lemma":
        extra.update(lemma=ns.lemma, random_sets=ns.random_sets)
        if ns.max_n is not None:
            extra["max_n"] = ns.max_n
    return RunConfig(command=ns.command, family=ns.family, input=ns.input, which=ns.which,
                     radius=ns.radius, tolerant=ns.tolerant, eps_eq=ns.eps_eq,
                     eps_comm=ns.eps_comm, eps_spec=ns.eps_spec, eps_block=ns.eps_block,
                     cap=ns.cap, seed=ns.seed, out=ns.out, format=ns.format,
                     strategy=ns.strategy, extra=extra)


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        lead = [k for k in ("r", "size", "ratio7") if k in rows[0]]
        w = csv.DictWriter(buf, fieldnames=lead + [k for k in rows[0] if k not in lead])
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def _emit(report: dict, out: str | None, fmt: str) -> None:
    rows = report.get("results", {}).get("rows")
    if fmt == "csv" and isinstance(rows, list):
        text = _csv_text(rows)
    else:
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.command == "verify-report":
            report, code = verify_report(ns.report)
            _emit(report, ns.out, "json")
            return code
        cfg = config_from_args(ns)
        report, code = execute(cfg)
        _emit(report, cfg.out, cfg.format)
        return code
    except CapExceeded as exc:
        _emit({"passed": False, "error": "CapExceeded", "message": str(exc),
               "partial_size": exc.partial_size, "cap": exc.cap}, getattr(ns, "out", None), "json")
        return EXIT_CAP
    except (InvalidSpec, FileNotFoundError) as exc:
        log.error("%s", exc)
        _emit({"passed": False, "error": type(exc).__name__, "message": str(exc)},
              getattr(ns, "out", None), "json")
        return EXIT_USAGE
    except (ApproxGroupError, AssertionError, ValueError) as exc:
        _emit({"passed": False, "error": type(exc).__name__, "message": str(exc)},
              getattr(ns, "out", None), "json")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
