"""Command-line entry point: ``fkcable {jones,alexander,ahat,fk,verify}``.

Every command builds a JSON payload.  Payloads are cached under a hash of
the run configuration and rendered as json, csv or text.  Exit status is 0
on success, 1 on a computation error and 2 on a configuration error; errors
are written to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import random
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

from gmpy2 import mpq

from .laurent import LATTICE, LaurentPoly

log = logging.getLogger("fkcable")

CACHE_ENV = "FKCABLE_CACHE_DIR"
CACHE_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    r: int = 9
    knot: str = "cable"
    n: int = 1
    normalized: bool = True
    expand: int | None = None
    n_max: int = 8
    verify_annihilation: bool = False
    m_max: int = 151
    R: int = 24
    hbar_orders: int = 3
    report_conjectures: bool = False
    goldens: bool = False
    properties: bool = False
    trials: int = 20
    seed: int = 0
    format: str = "json"
    cache_dir: str | None = None
    use_cache: bool = True
    out: str | None = None
    emit_coefficients: str | None = None

    def cache_key(self) -> dict:
        """Fields that determine the payload."""
        keys = {
            "jones": ("r", "knot", "n", "normalized"),
            "alexander": ("r", "expand"),
            "ahat": ("r", "verify_annihilation", "n_max"),
            "fk": ("r", "m_max", "R", "hbar_orders"),
        }[self.command]
        d = asdict(self)
        return {"command": self.command, "version": CACHE_VERSION, **{k: d[k] for k in keys}}

    def config_hash(self) -> str:
        text = json.dumps(self.cache_key(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Serialization


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _exp(e: int) -> str:
    return str(Fraction(e, LATTICE))


def _rows(p: LaurentPoly) -> list[list[str]]:
    """``[exponent..., coefficient]`` rows in canonical order."""
    return [[_exp(x) for x in e] + [t["c"]] for e, t in zip(sorted(p.terms), p.to_json_obj()["terms"])]


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Commands


def _knot(cfg: RunConfig):
    from .jones import FIG8, UNKNOT, cable

    return {"unknot": UNKNOT, "fig8": FIG8, "cable": None}[cfg.knot] or cable(cfg.r)


def cmd_jones(cfg: RunConfig) -> dict:
    from .jones import colored_jones

    cj = colored_jones(_knot(cfg), cfg.n, cfg.normalized)
    return {"knot": str(cj.knot), "n": cfg.n, "normalized": cfg.normalized, "value": cj.value.to_json_obj()}


def cmd_alexander(cfg: RunConfig) -> dict:
    from .alexander import alexander_cable, alexander_fig8, symmetric_expansion

    delta = alexander_cable(2, cfg.r, alexander_fig8()).in_var("x")
    out = {
        "knot": delta.knot,
        "value": delta.value.to_json_obj(),
        "monic": delta.is_monic(),
        "at_one": str(delta.at_one()),
    }
    if cfg.expand is not None:
        se = symmetric_expansion(delta, cfg.expand)
        out["expansion"] = {"m_max": cfg.expand, "coefficients": {str(m): str(c) for m, c in se.coefficients.items()}}
    return out


def cmd_ahat(cfg: RunConfig) -> dict:
    from .qtorus import extract_fm_recursion, resolve_ahat, to_xq_recursion, verify_annihilation

    res = resolve_ahat(cfg.r)
    xq = to_xq_recursion(res.bundle)
    fm = extract_fm_recursion(xq)
    out = {
        "r": cfg.r,
        "variant": res.bundle.variant,
        "attempts": [{"variant": v, "annihilates": ok} for v, ok in res.attempts],
        "l_degree": res.bundle.ahat.degree(),
        "relation_sizes": [len(c.terms) for c in xq.relation],
        "alpha_delta": {k: getattr(xq, k).to_json_obj() for k in ("alpha", "beta", "gamma", "delta")},
        "fm_recursion": {
            "span": fm.span,
            "offsets": fm.offsets,
            "lead": fm.lead.to_json_obj(),
            "taps": {str(k): v.to_json_obj() for k, v in sorted(fm.taps.items())},
        },
    }
    if cfg.verify_annihilation:
        checks = verify_annihilation(res.bundle, cfg.n_max)
        out["annihilation"] = {str(n): ok for n, ok in sorted(checks.items())}
    return out


def cmd_fk(cfg: RunConfig) -> dict:
    from .fk import assemble_hbar_table, check_conjectures, compute_fk

    if cfg.hbar_orders > cfg.R + 1:
        raise ConfigError(f"--hbar-orders {cfg.hbar_orders} exceeds R + 1 = {cfg.R + 1}")
    res = compute_fk(cfg.r, cfg.m_max, cfg.R)
    log.info("timings: %s", {k: round(v, 2) for k, v in res.timings.items()})
    fk = res.fk
    fm = [{"m": m, "f": fk.get(m).to_json_obj()} for m in range(1, cfg.m_max + 1, 2)]
    table = None
    if cfg.hbar_orders:
        t = assemble_hbar_table(fk, cfg.hbar_orders - 1, cfg.m_max)
        h = LaurentPoly.monomial({"h": 1})
        table = sum((t.series(r).embed(("h", "x")) * h**r for r in range(cfg.hbar_orders)), LaurentPoly(("h", "x")))
    report = check_conjectures(fk, cfg.r)
    return {
        "r": cfg.r,
        "m_max": cfg.m_max,
        "R": cfg.R,
        "normalization": fk.normalization,
        "seed_max": res.seed_max,
        "ahat_variant": res.ahat_variant,
        "undetermined_by_matching": res.initial.undetermined,
        "fm": fm,
        "hbar_table": None if table is None else {"orders": cfg.hbar_orders, "value": table.to_json_obj()},
        "conjectures": report.to_json_obj(),
    }


def _property_checks(seed: int, trials: int) -> list[dict]:
    """Quick randomized ring checks; the full suites live in the test tree."""
    from .laurent import series_inverse

    rng = random.Random(seed)

    def rand_poly():
        terms = {}
        for _ in range(rng.randint(1, 5)):
            e = (4 * rng.randint(-4, 4), 4 * rng.randint(-3, 3))
            terms[e] = mpq(rng.randint(-9, 9), rng.randint(1, 4))
        return LaurentPoly(("q", "x"), terms)

    ring = distrib = inverse = True
    for _ in range(trials):
        a, b, c = rand_poly(), rand_poly(), rand_poly()
        ring &= (a * b) * c == a * (b * c) and a * b == b * a
        distrib &= a * (b + c) == a * b + a * c
        k = rng.randint(1, 3)
        u = LaurentPoly.const(1, ("q",)) + LaurentPoly.monomial({"q": k}) * rng.choice([-5, -2, -1, 1, 3])
        rem = u * series_inverse(u, "at_zero", 12) - 1
        inverse &= rem.is_zero() or rem.valuation("q") >= 12 * k
    return [
        {"name": "associativity_commutativity", "passed": ring},
        {"name": "distributivity", "passed": distrib},
        {"name": "series_inverse_round_trip", "passed": inverse},
    ]


def cmd_verify(cfg: RunConfig) -> dict:
    from .reference import verify_goldens

    if not (cfg.goldens or cfg.properties):
        raise ConfigError("verify needs --goldens and/or --properties")
    out: dict = {}
    if cfg.goldens:
        out["goldens"] = [asdict(c) for c in verify_goldens()]
    if cfg.properties:
        out["properties"] = {"seed": cfg.seed, "trials": cfg.trials, "checks": _property_checks(cfg.seed, cfg.trials)}
    checks = out.get("goldens", []) + out.get("properties", {}).get("checks", [])
    out["passed"] = all(c["passed"] for c in checks)
    return out


COMMANDS = {"jones": cmd_jones, "alexander": cmd_alexander, "ahat": cmd_ahat, "fk": cmd_fk, "verify": cmd_verify}


# ---------------------------------------------------------------------------
# Rendering


def render(cfg: RunConfig, payload: dict) -> str:
    if cfg.command == "fk" and not cfg.report_conjectures:
        payload = {k: v for k, v in payload.items() if k != "conjectures"}
    if cfg.format == "json":
        return canonical_json(payload)
    if cfg.format == "csv":
        return _render_csv(cfg, payload)
    return _render_text(cfg, payload)


def _render_csv(cfg: RunConfig, p: dict) -> str:
    if cfg.command == "jones":
        return _csv(["exponent", "coefficient"], _rows(LaurentPoly.from_json_obj(p["value"])))
    if cfg.command == "alexander":
        if "expansion" in p:
            coeffs = p["expansion"]["coefficients"]
            return _csv(["m", "c_m"], [[m, coeffs[m]] for m in sorted(coeffs, key=int)])
        return _csv(["exponent", "coefficient"], _rows(LaurentPoly.from_json_obj(p["value"])))
    if cfg.command == "ahat":
        rows = []
        for off, tap in p["fm_recursion"]["taps"].items():
            poly = LaurentPoly.from_json_obj(tap)
            rows += [[off] + r for r in _rows(poly.embed(("q", "w")))]
        return _csv(["offset", "q_exponent", "w_exponent", "coefficient"], rows)
    if cfg.command == "fk":
        rows = []
        for item in p["fm"]:
            rows += [[item["m"]] + r for r in _rows(LaurentPoly.from_json_obj(item["f"]))]
        return _csv(["m", "exponent", "coefficient"], rows)
    checks = p.get("goldens", []) + p.get("properties", {}).get("checks", [])
    return _csv(["name", "passed"], [[c["name"], c["passed"]] for c in checks])


def _render_text(cfg: RunConfig, p: dict) -> str:
    lines = []
    if cfg.command in ("jones", "alexander"):
        lines.append(LaurentPoly.from_json_obj(p["value"]).to_str())
        for m, c in (p.get("expansion") or {}).get("coefficients", {}).items():
            lines.append(f"c_{m} = {c}")
    elif cfg.command == "ahat":
        fm = p["fm_recursion"]
        lines.append(f"variant: {p['variant']}")
        lines.append(f"relation sizes: {p['relation_sizes']}")
        lines.append(f"span {fm['span']}, offsets {fm['offsets']}")
        lines.append(f"lead: {LaurentPoly.from_json_obj(fm['lead']).to_str()}")
        for n, ok in (p.get("annihilation") or {}).items():
            lines.append(f"n={n}: {'annihilated' if ok else 'FAILED'}")
    elif cfg.command == "fk":
        for item in p["fm"]:
            f = LaurentPoly.from_json_obj(item["f"])
            if not f.is_zero():
                lines.append(f"f_{item['m']} = {f.to_str()}")
        for c in (p.get("conjectures") or {}).get("checks", []):
            lines.append(f"[{'pass' if c['passed'] else 'FAIL'}] {c['name']}: {c['detail']}")
    else:
        for c in p.get("goldens", []) + p.get("properties", {}).get("checks", []):
            lines.append(f"[{'pass' if c['passed'] else 'FAIL'}] {c['name']} {c.get('detail', '')}".rstrip())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Cache


def cache_dir(cfg: RunConfig) -> Path:
    if cfg.cache_dir:
        return Path(cfg.cache_dir)
    if os.environ.get(CACHE_ENV):
        return Path(os.environ[CACHE_ENV])
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "fkcable"


def compute_payload(cfg: RunConfig) -> dict:
    fn = COMMANDS[cfg.command]
    if cfg.command == "verify" or not cfg.use_cache:
        return fn(cfg)
    key = cfg.config_hash()
    path = cache_dir(cfg) / f"{cfg.command}-{key}.json"
    if path.exists():
        log.info("cache hit %s (%s) config=%s", key, path, json.dumps(cfg.cache_key(), sort_keys=True))
        return json.loads(path.read_text())
    payload = fn(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(canonical_json(payload))
    tmp.replace(path)
    log.info("cache store %s (%s) config=%s", key, path, json.dumps(cfg.cache_key(), sort_keys=True))
    return payload


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    payload = compute_payload(cfg)
    text = render(cfg, payload)
    stdout.write(text)
    if cfg.out:
        Path(cfg.out).write_text(text)
    if cfg.emit_coefficients:
        emitted = {"alpha_delta": payload["alpha_delta"], "taps": payload["fm_recursion"]["taps"]}
        Path(cfg.emit_coefficients).write_text(canonical_json(emitted))
    if cfg.command == "verify" and not payload["passed"]:
        return 1
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _cable(text: str) -> int:
    try:
        r, p = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected R,2 (e.g. 9,2), got {text!r}")
    if p != 2:
        raise argparse.ArgumentTypeError(f"only (r,2)-cables are supported, got {text!r}")
    return r


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as :class:`ConfigError` instead of exiting."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--cache-dir", help=f"result cache (default ${CACHE_ENV} or ~/.cache/fkcable)")
    common.add_argument("--no-cache", dest="use_cache", action="store_false")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--out", help="also write the rendered output to this file")
    common.add_argument("-q", "--quiet", action="store_true", help="suppress provenance logging")

    parser = _Parser(prog="fkcable", description="F_K(x,q) for (r,2)-cables of the figure-eight knot")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("jones", parents=[common], help="colored Jones polynomial")
    p.add_argument("--cable", type=_cable, dest="r", default=9, metavar="R,2")
    p.add_argument("--knot", choices=("unknot", "fig8", "cable"), default="cable")
    p.add_argument("--n", type=int, default=1)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--normalized", dest="normalized", action="store_true", default=True)
    g.add_argument("--unnormalized", dest="normalized", action="store_false")

    p = sub.add_parser("alexander", parents=[common], help="Alexander polynomial and symmetric expansion")
    p.add_argument("--cable", type=_cable, dest="r", default=9, metavar="R,2")
    p.add_argument("--expand", type=int, metavar="M", help="expansion coefficients for odd m <= M")

    p = sub.add_parser("ahat", parents=[common], help="annihilator and derived recursions")
    p.add_argument("--r", type=int, default=9)
    p.add_argument("--emit-coefficients", metavar="PATH")
    p.add_argument("--verify-annihilation", action="store_true")
    p.add_argument("--n-max", type=int, default=8)

    p = sub.add_parser("fk", parents=[common], help="f_m series, h-table and conjecture report")
    p.add_argument("--r", type=int, default=9)
    p.add_argument("--m-max", type=int, default=151)
    p.add_argument("--R", type=int, default=24)
    p.add_argument("--hbar-orders", type=int, default=3)
    p.add_argument("--report-conjectures", action="store_true")

    p = sub.add_parser("verify", parents=[common], help="check shipped reference values")
    p.add_argument("--goldens", "--paper-goldens", dest="goldens", action="store_true", help="check every shipped golden")
    p.add_argument("--properties", action="store_true")
    p.add_argument("--trials", type=int, default=20)
    return parser


def _validate(cfg: RunConfig) -> None:
    from .jones import Knot

    try:
        if cfg.command in ("jones", "alexander", "ahat", "fk") and (cfg.command != "jones" or cfg.knot == "cable"):
            Knot("cable", cfg.r)
    except ValueError as e:
        raise ConfigError(str(e))
    if cfg.command == "jones" and cfg.n < 1:
        raise ConfigError(f"--n must be >= 1, got {cfg.n}")
    if cfg.command == "alexander" and cfg.expand is not None and cfg.expand < 1:
        raise ConfigError("--expand must be positive")
    if cfg.command == "ahat" and cfg.n_max < 1:
        raise ConfigError("--n-max must be >= 1")
    if cfg.command == "fk":
        if cfg.m_max < 1 or cfg.m_max % 2 == 0:
            raise ConfigError(f"--m-max must be a positive odd integer, got {cfg.m_max}")
        if cfg.R < 2:
            raise ConfigError("--R must be >= 2")
        if not 0 <= cfg.hbar_orders <= cfg.R + 1:
            raise ConfigError(f"--hbar-orders must lie in [0, R + 1], got {cfg.hbar_orders}")
    if cfg.command == "verify" and not (cfg.goldens or cfg.properties):
        raise ConfigError("verify needs --goldens and/or --properties")


def parse_config(argv: list[str] | None = None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    args.pop("quiet")
    known = {f for f in RunConfig.__dataclass_fields__}
    cfg = RunConfig(**{k: v for k, v in args.items() if k in known})
    _validate(cfg)
    return cfg


def _error(kind: str, exc: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.WARNING if "-q" in argv or "--quiet" in argv else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = parse_config(argv)
    except ConfigError as e:
        return _error("config", e, 2)
    try:
        return run(cfg)
    except ConfigError as e:
        return _error("config", e, 2)
    except BrokenPipeError:
        return 0
    except (ArithmeticError, ValueError, KeyError, OSError) as e:
        return _error("computation", e, 1)


if __name__ == "__main__":
    sys.exit(main())
