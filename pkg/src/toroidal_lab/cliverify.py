"""Command-line driver: configuration, suite selection, convergence sweeps and
JSON reports.

    toroidal-lab verify f22 --M 1 --degree 4 --window 2 --report out.json
    toroidal-lab sweep level2 --degrees 2,3

Exit codes: 0 when every check passes, 1 when any check fails, 2 for
configuration errors, convergence errors and inconclusive runs.
"""

from __future__ import annotations

import cmath
import dataclasses
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import click

from . import __version__
from .qkernel import ParameterContext, PoleError
from .vertexcalc import CheckResult

REPORT_VERSION = "1"
SUITES = ("e1", "contractions", "phik", "f22", "extend", "f111222", "level2", "fermion",
          "gl11", "appendixB")

DEFAULT_Q1 = "0.58+0.11i"
DEFAULT_Q2 = "1.1@0.9"
# screened suites: |q2| away from 1 keeps the contour annuli wide (1.1 also passes)
SCREENED_Q2 = "1.5@0.9"


class ConfigError(ValueError):
    pass


def parse_complex(text: str) -> complex:
    """'a+bi', 'a+bj', 'a' or polar 'r@phi' (r e^{i phi})."""
    s = str(text).strip().replace(" ", "")
    if "@" in s:
        r, phi = s.split("@", 1)
        try:
            return float(r) * cmath.exp(1j * float(phi))
        except ValueError as exc:
            raise ConfigError(f"cannot parse polar value {text!r}") from exc
    try:
        return complex(s.replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex value {text!r}") from exc


def canonical_complex(text: str) -> str:
    """One spelling per value, so equal parameters hash equally."""
    z = parse_complex(text)
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}i"


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class SuiteDefaults:
    q2: str = DEFAULT_Q2
    M: int | None = 1
    N: Callable[[int], int] | None = None   # N as a function of M; None: not a free field
    degree: int | None = None
    window: int | None = None
    modes: int | None = None
    tol: float = 1e-8
    rep: str | None = None
    norm_mutation: bool = False


SUITE_DEFAULTS: dict[str, SuiteDefaults] = {
    "e1": SuiteDefaults(degree=5, window=None, rep="all"),
    "contractions": SuiteDefaults(modes=12),
    "phik": SuiteDefaults(degree=5, window=1, modes=2),
    "f22": SuiteDefaults(N=lambda M: M - 1, degree=4, window=2),
    "extend": SuiteDefaults(degree=3, window=1),
    "f111222": SuiteDefaults(degree=3, window=1),
    "level2": SuiteDefaults(q2=SCREENED_Q2, N=lambda M: 2 * M - 2, degree=3, window=1,
                            tol=1e-6, norm_mutation=True),
    "fermion": SuiteDefaults(degree=4, window=2),
    "gl11": SuiteDefaults(M=0, N=lambda M: 0, degree=3, window=1),
    "appendixB": SuiteDefaults(q2=SCREENED_Q2, N=lambda M: 2 * M - 2, degree=4, tol=1e-6),
}

SEMANTIC_KEYS = ("suite", "q1", "q2", "M", "N", "degree", "window", "modes", "tol", "bits",
                 "quad_points", "seed", "rep", "norm_mutation")
INT_KEYS = {"M", "N", "degree", "window", "modes", "bits", "quad_points", "seed", "jobs"}
FLOAT_KEYS = {"tol", "norm_mutation"}
STR_KEYS = {"q1", "q2", "rep", "report", "suite"}


@dataclass(frozen=True)
class VerificationConfig:
    suite: str
    q1: str = DEFAULT_Q1
    q2: str = DEFAULT_Q2
    M: int | None = None
    N: int | None = None
    degree: int | None = None
    window: int | None = None
    modes: int | None = None
    tol: float = 1e-8
    bits: int = 53
    quad_points: int = 256
    seed: int = 7
    rep: str | None = None
    norm_mutation: float = 0.0
    report: str | None = None

    def semantic(self) -> dict:
        return {k: getattr(self, k) for k in SEMANTIC_KEYS}

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def context(self) -> ParameterContext:
        return ParameterContext.create(parse_complex(self.q1), parse_complex(self.q2),
                                       M=self.M if self.M is not None else 0, N=self.N,
                                       bits=self.bits)


def read_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment; keys as the long flags."""
    out: dict = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (x.strip() for x in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        out[key] = _coerce(key, value)
    return out


def _coerce(key: str, value):
    if key in INT_KEYS:
        try:
            return int(value)
        except ValueError as exc:
            raise ConfigError(f"{key} expects an integer, got {value!r}") from exc
    if key in FLOAT_KEYS:
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigError(f"{key} expects a number, got {value!r}") from exc
    if key in STR_KEYS:
        return value
    raise ConfigError(f"unknown configuration key {key!r}")


def resolve(suite: str | None, given: dict) -> VerificationConfig:
    """Fill suite defaults into the user's values and validate the result.

    Options that mean nothing for the chosen suite are rejected, so the config
    hash only depends on fields that change the computation."""
    if not suite:
        raise ConfigError("no suite selected")
    if suite not in SUITE_DEFAULTS:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)} or all")
    d = SUITE_DEFAULTS[suite]
    given = {k: v for k, v in given.items() if v is not None}
    for key, default in (("degree", d.degree), ("window", d.window), ("modes", d.modes),
                         ("rep", d.rep)):
        if key in given and default is None and not (key == "window" and suite == "e1"):
            raise ConfigError(f"--{key} does not apply to suite {suite}")
    if "norm_mutation" in given and not d.norm_mutation:
        raise ConfigError(f"--norm-mutation does not apply to suite {suite}")
    M = given.get("M", d.M)
    if "M" in given and suite == "gl11" and M != d.M:
        raise ConfigError(f"suite {suite} runs at M = {d.M}")
    if d.N is not None:
        N = d.N(M)
        if "N" in given and given["N"] != N:
            raise ConfigError(f"suite {suite} needs N = {N} at M = {M}")
    else:
        N = given.get("N", M - 1)
    if suite == "level2" and M % 2 == 0:
        raise ConfigError("the level-two suite needs odd M")
    cfg = VerificationConfig(
        suite=suite,
        q1=canonical_complex(given.get("q1", DEFAULT_Q1)),
        q2=canonical_complex(given.get("q2", d.q2)),
        M=M, N=N,
        degree=given.get("degree", d.degree),
        window=given.get("window", d.window),
        modes=given.get("modes", d.modes),
        tol=float(given.get("tol", d.tol)),
        bits=given.get("bits", 53),
        quad_points=given.get("quad_points", 256),
        seed=given.get("seed", 7),
        rep=given.get("rep", d.rep),
        norm_mutation=float(given.get("norm_mutation", 0.0)),
        report=given.get("report"),
    )
    for key in ("degree", "modes", "quad_points"):
        v = getattr(cfg, key)
        if v is not None and v < 1:
            raise ConfigError(f"--{key.replace('_', '-')} must be positive")
    if cfg.window is not None and cfg.window < 0:
        raise ConfigError("--window must be non-negative")
    if cfg.bits < 53:
        raise ConfigError("--bits below double precision is not supported")
    if cfg.tol <= 0:
        raise ConfigError("--tol must be positive")
    if suite == "e1" and cfg.rep not in ("all", "vector1", "fock1", "fock2", "fock3", "fock22"):
        raise ConfigError(f"unknown e1 representation {cfg.rep!r}")
    cfg.context()   # parameter invariants are checked before any suite runs
    return cfg


# ---------------------------------------------------------------------------
# suites

def _suite_e1(cfg: VerificationConfig, ctx: ParameterContext) -> list[CheckResult]:
    from .vertexcalc import verify_e1_rep
    reps = ("vector1", "fock1", "fock2", "fock3", "fock22") if cfg.rep == "all" else (cfg.rep,)
    out = []
    for rep in reps:
        # the two-factor tensor product runs one degree lower
        D = cfg.degree - 1 if rep == "fock22" and cfg.rep == "all" else cfg.degree
        out += verify_e1_rep(ctx, rep, D=max(D, 1), tol=cfg.tol, window=cfg.window)
    return out


def _suite_contractions(cfg, ctx):
    from .vertexcalc import commutation_kernels, contraction_table
    tol = min(cfg.tol, 1e-10)
    return (contraction_table(ctx, order=cfg.modes, tol=tol)
            + commutation_kernels(ctx, samples=20, seed=cfg.seed, tol=tol))


def _suite_phik(cfg, ctx):
    from .vertexcalc import delta_k_check, k_on_fock_check, phik_identities
    out = []
    for r in range(cfg.modes + 1):
        out += phik_identities(ctx, r, D=cfg.degree, W=cfg.window, tol=cfg.tol)
    D2 = max(cfg.degree - 1, 1)
    out += delta_k_check(ctx, D=D2, rmax=cfg.modes, tol=cfg.tol)
    out += k_on_fock_check(ctx, D=D2, rmax=max(cfg.modes, 3), tol=cfg.tol)
    return out


F22_LAMBDA = 0.37 + 0.05j


def _f22_lambdas(M: int) -> tuple[complex, complex]:
    return F22_LAMBDA, (M + 1) / 2 - F22_LAMBDA + 1


def _suite_f22(cfg, ctx):
    from .amn import build_F22, verify_recursions, verify_relations
    rep = build_F22(ctx, *_f22_lambdas(ctx.M), D=cfg.degree, W=cfg.window)
    return verify_relations(rep, tol=cfg.tol) + verify_recursions(rep, tol=cfg.tol)


AUTOMORPHISMS = (("shift", 0.8 * cmath.exp(0.4j)), ("scale", 1.7 - 0.3j), ("relabel", None),
                 ("swap", None))
EXTENSION_LAMBDA = 0.21 - 0.13j


def _recheck(rep, tol, tag):
    from .amn import verify_recursions, verify_relations
    res = verify_recursions(rep, tol=tol) + verify_relations(
        rep, r1_indices=(0,), r2_indices=(0, 1), tol=tol, window=4)
    for r in res:
        r.name = f"{r.name} <{tag}>"
    return res


def _suite_extend(cfg, ctx):
    from .amn import apply_automorphism, build_F22, four_term_check, ef_sum_check, ef_sum_rep
    from .amn import extend_by_F1
    rep = build_F22(ctx, *_f22_lambdas(ctx.M), D=cfg.degree, W=cfg.window)
    out = []
    for kind, param in AUTOMORPHISMS:
        out += _recheck(apply_automorphism(rep, kind, param), cfg.tol, kind)
    for case in (1, 2, 3, 4):
        out += _recheck(extend_by_F1(rep, case, EXTENSION_LAMBDA), cfg.tol, f"case {case}")
    # the worked examples live at M = -1
    ex = ctx.with_MN(-1, -2)
    ex2, _ = four_term_check(ex, 0.31 + 0.1j, -0.22 + 0.05j, 0.37, 1 - 0.37, D=cfg.degree,
                          W=cfg.window, tol=cfg.tol)
    out += ex2
    rep3 = ef_sum_rep(ex, 0.31 + 0.1j, 0.37, -0.22 + 0.05j, 1 - 0.37, D=cfg.degree,
                        W=cfg.window)
    out += ef_sum_check(rep3, tol=cfg.tol, window=5)
    return out


F111222_CASES = ((2, 1, 1, 1), (1, 2, 1, 2), (2, 2, 2, 1), (3, 1, 3, 1))


def _suite_f111222(cfg, ctx):
    from .amn import build_F111222, expected_variant, verify_recursions, verify_relations
    out = []
    lam, lam_c = _f22_lambdas(ctx.M)
    for m, mc, a, b in F111222_CASES:
        lams = [0.21 - 0.13j, -0.18 + 0.09j, 0.27 + 0.02j][:m]
        lams_c = [0.11 + 0.04j, -0.31 - 0.06j][:mc]
        lams[a - 1], lams_c[b - 1] = lam, lam_c
        rep = build_F111222(ctx, m, mc, a, b, lams, lams_c, D=cfg.degree, W=cfg.window)
        tag = f"m={m},mc={mc},a={a},b={b}"
        ok = rep.variant == expected_variant(m, mc, a, b)
        out.append(CheckResult(f"variant {rep.variant} <{tag}>", "variant of the mixed layout",
                               0.0 if ok else 1.0, 0.0 if ok else 1.0, 1, 0, 1.0, tol=cfg.tol))
        for r in verify_recursions(rep, tol=cfg.tol) + verify_relations(rep, tol=cfg.tol):
            r.name = f"{r.name} <{tag}>"
            out.append(r)
    return out


LEVEL2_LAMBDAS = (0.31 + 0.07j, -0.22 + 0.05j)


def _suite_level2(cfg, ctx):
    from .amn import verify_R1, verify_R2, verify_R3
    from .screening import build_F2222
    lams = LEVEL2_LAMBDAS
    lams_c = (1 - lams[0], 2 - lams[1])
    rep = build_F2222(ctx, lams, lams_c, D=cfg.degree, W=cfg.window, points=cfg.quad_points,
                      norm_scale=1 + cfg.norm_mutation)
    pairs = [(Fraction(i), Fraction(s - i)) for s in (-1, 0, 1) for i in (-1, 0, 1)]
    return (verify_R1(rep, (0,), tol=cfg.tol) + verify_R2(rep, (-1, 0, 1), tol=cfg.tol)
            + verify_R3(rep, pairs, tol=cfg.tol, delta_relative=True))


def _suite_fermion(cfg, ctx):
    from .fermionR import run_fermion_suite
    return run_fermion_suite(ctx, D=cfg.degree, window=cfg.window, tol=cfg.tol)


def _suite_gl11(cfg, ctx):
    from .amn import gl11_check, gl11_rep
    rep = gl11_rep(ctx, 0.37, 0.5 - 0.37, 0.27 - 0.1j, D=cfg.degree, W=cfg.window)
    return gl11_check(rep, tol=cfg.tol, window=5)


def _suite_appendixB(cfg, ctx):
    from .fockspace import Factor, enumerate_slices
    from .screening import (cross_validate_screened, cross_validation_space,
                            verify_residue_identities, verify_Rinverse)

    def space(checked, l1, l2):
        lay = (Factor(2, checked, True, l1, "F2"), Factor(2, checked, True, l2, "F2"))
        return enumerate_slices(ctx, lay, cfg.degree, 1, "free")

    plain = space(False, *LEVEL2_LAMBDAS)
    checked = space(True, 1 - LEVEL2_LAMBDAS[0], 2 - LEVEL2_LAMBDAS[1])
    return (verify_Rinverse(ctx, samples=20, seed=cfg.seed, tol=min(cfg.tol, 1e-10))
            + verify_residue_identities(plain, checked, rs=(0, 1), points=cfg.quad_points,
                                    tol=cfg.tol)
            + [dataclasses.replace(r, name=f"{r.name} [{'checked' if chk else 'plain'}]")
               for chk in (False, True) for kind in ("Phi-", "Phi*-")
               for r in cross_validate_screened(kind, cross_validation_space(ctx, chk),
                                                points=cfg.quad_points, tol=cfg.tol)])


RUNNERS = {
    "e1": _suite_e1, "contractions": _suite_contractions, "phik": _suite_phik,
    "f22": _suite_f22, "extend": _suite_extend, "f111222": _suite_f111222,
    "level2": _suite_level2, "fermion": _suite_fermion, "gl11": _suite_gl11,
    "appendixB": _suite_appendixB,
}

CONFIG_ERRORS = (ConfigError, ValueError, NotImplementedError)
RUN_ERRORS = (ArithmeticError, PoleError)


def run_suite(cfg: VerificationConfig, timings: bool = False) -> list[dict]:
    """Run one suite and return its check records in report form."""
    ctx = cfg.context()
    t0 = time.perf_counter()
    results = RUNNERS[cfg.suite](cfg, ctx)
    total = (time.perf_counter() - t0) * 1000
    records = []
    for r in results:
        rec = r.as_dict()
        rec["name"] = f"{cfg.suite}: {rec['name']}"
        rec["ms"] = round(r.ms, 1) if timings else 0
        records.append(rec)
    if timings and records and all(r.ms == 0 for r in results):
        records[0]["ms"] = round(total, 1)
    return records


def summarize(checks: list[dict]) -> dict:
    out = {"pass": 0, "fail": 0, "inconclusive": 0}
    for c in checks:
        out[c["status"]] += 1
    return out


def exit_code(summary: dict) -> int:
    if summary["fail"]:
        return 1
    if summary["inconclusive"] or not sum(summary.values()):
        return 2
    return 0


def build_report(configs: list[VerificationConfig], checks: list[dict], error: str | None = None) -> dict:
    if len(configs) == 1:
        config = dict(configs[0].semantic(), hash=configs[0].config_hash())
    else:
        config = {"suite": "all", "suites": [dict(c.semantic(), hash=c.config_hash()) for c in configs]}
        config["hash"] = hashlib.sha256(
            "".join(c.config_hash() for c in configs).encode()).hexdigest()[:16]
    report = {"version": REPORT_VERSION, "package": __version__, "config": config,
              "checks": checks, "summary": summarize(checks)}
    if error:
        report["error"] = error
    return report


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def _merge(config_file: str | None, flags: dict) -> dict:
    given = read_config_file(config_file) if config_file else {}
    given.update({k: v for k, v in flags.items() if v is not None})
    return given


def resolve_all(given: dict) -> list[VerificationConfig]:
    """Per-suite configs for 'all': only global options may be overridden."""
    structural = [k for k in ("M", "N", "degree", "window", "modes", "rep", "norm_mutation")
                  if given.get(k) is not None]
    if structural:
        raise ConfigError(f"suite 'all' uses per-suite defaults; drop {', '.join(structural)}")
    return [resolve(s, given) for s in SUITES]


def _emit(report: dict, path: str | None) -> None:
    text = dump_report(report)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
        s = report["summary"]
        click.echo(f"{s['pass']} pass, {s['fail']} fail, {s['inconclusive']} inconclusive "
                   f"-> {path}")
        for c in report["checks"]:
            if c["status"] != "pass":
                click.echo(f"  {c['status']}: {c['name']} (residual {c['residual']:.2e})")
    else:
        click.echo(text, nl=False)


def run(cfgs: list[VerificationConfig], jobs: int = 1, timings: bool = False) -> tuple[dict, int]:
    """Execute the selected suites; returns (report, exit code)."""
    checks: list[dict] = []
    try:
        if jobs > 1 and len(cfgs) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                parts = list(pool.map(run_suite, cfgs, [timings] * len(cfgs)))
        else:
            parts = [run_suite(c, timings) for c in cfgs]
    except RUN_ERRORS + CONFIG_ERRORS as exc:
        report = build_report(cfgs, checks, f"{type(exc).__name__}: {exc}")
        return report, 2
    for p in parts:
        checks += p
    report = build_report(cfgs, checks)
    return report, exit_code(report["summary"])


# ---------------------------------------------------------------------------
# command line

def _common(f):
    opts = [
        click.option("--config", "config_file", type=click.Path(dir_okay=False),
                     help="flat key=value file; flags override it"),
        click.option("--M", "M", type=int), click.option("--N", "N", type=int),
        click.option("--q1", type=str, help="complex as 'a+bi' or polar 'r@phi'"),
        click.option("--q2", type=str),
        click.option("--degree", type=int, help="oscillator degree cutoff D"),
        click.option("--window", type=int, help="zero-mode / index window W"),
        click.option("--modes", type=int, help="mode cutoff K (series order, r range)"),
        click.option("--tol", type=float), click.option("--bits", type=int),
        click.option("--quad-points", "quad_points", type=int),
        click.option("--seed", type=int),
        click.option("--rep", type=str, help="e1 representation or 'all'"),
        click.option("--norm-mutation", "norm_mutation", type=float,
                     help="level2 only: relative perturbation of the level-two normalization"),
        click.option("--jobs", type=int, default=1, show_default=True),
        click.option("--timings/--no-timings", default=False,
                     help="record wall times (makes reports non-reproducible)"),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Numerical verification suites for the toroidal gl(1) workbench."""


@main.command()
@click.argument("suite", required=False)
@click.option("--report", type=click.Path(dir_okay=False), help="write the JSON report here")
@_common
def verify(suite, report, config_file, jobs, timings, **flags):
    """Run SUITE (one of the suites below, or all) and write a JSON report.

    Suites: e1 contractions phik f22 extend f111222 level2 fermion gl11 appendixB."""
    try:
        given = _merge(config_file, dict(flags, report=report))
        suite = suite or given.pop("suite", None)
        given.pop("suite", None)
        cfgs = resolve_all(given) if suite == "all" else [resolve(suite, given)]
    except CONFIG_ERRORS as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(2)
    rep, code = run(cfgs, jobs=jobs, timings=timings)
    _emit(rep, given.get("report"))
    sys.exit(code)


# rounding floor: changes below this are not resolved by the relative residuals
SWEEP_FLOOR = 1e-12


def sweep_table(rows: dict[str, list[float]], tol: float, degrees: list[int],
                floors: dict[str, list[float]] | None = None) -> list[dict]:
    """Flag each check: 'fail' if the residual at the largest degree exceeds tol,
    'non-monotone' if it grows by more than the rounding floor, else 'ok'.

    ``floors`` holds per-check rounding levels reported by the checks
    themselves; growth that stays below them is not counted."""
    floors = floors or {}
    table = []
    for name, res in rows.items():
        fl = floors.get(name, [0.0] * len(res))
        grows = any(b > a + max(SWEEP_FLOOR, f) for a, b, f in zip(res, res[1:], fl[1:]))
        flag = "fail" if res[-1] > tol else ("non-monotone" if grows else "ok")
        row = {"name": name, "residuals": dict(zip(map(str, degrees), res)), "flag": flag}
        if any(fl):
            row["floors"] = dict(zip(map(str, degrees), fl))
        table.append(row)
    return table


@main.command()
@click.argument("suite", required=False)
@click.option("--degrees", type=str, default=None, help="comma-separated degrees, at least two")
@click.option("--report", type=click.Path(dir_okay=False))
@_common
def sweep(suite, degrees, report, config_file, jobs, timings, **flags):
    """Residuals of SUITE per check across degrees, with convergence flags."""
    try:
        given = _merge(config_file, dict(flags, report=report))
        suite = suite or given.pop("suite", None)
        given.pop("suite", None)
        degs = [int(x) for x in (degrees or given.pop("degrees", "") or "").split(",") if x]
        if len(degs) < 2:
            raise ConfigError("a sweep needs at least two degrees")
        if given.get("degree") is not None:
            raise ConfigError("use --degrees for a sweep")
        cfgs = [resolve(suite, dict(given, degree=D)) for D in degs]
        if cfgs[0].degree is None:
            raise ConfigError(f"suite {suite} has no degree cutoff")
    except CONFIG_ERRORS as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(2)
    rows: dict[str, list[float]] = {}
    floors: dict[str, list[float]] = {}
    for cfg in cfgs:
        rep, code = run([cfg], timings=timings)
        if code == 2 and "error" in rep:
            click.echo(rep["error"], err=True)
            sys.exit(2)
        for c in rep["checks"]:
            rows.setdefault(c["name"], []).append(c["residual"])
            floors.setdefault(c["name"], []).append(c.get("floor", 0.0))
    rows = {k: v for k, v in rows.items() if len(v) == len(degs)}
    table = sweep_table(rows, cfgs[0].tol, degs, floors)
    base = dataclasses.replace(cfgs[0], degree=None)
    out = {"version": REPORT_VERSION, "package": __version__,
           "config": dict(base.semantic(), degrees=degs, hash=base.config_hash()),
           "sweep": table,
           "summary": {f: sum(1 for t in table if t["flag"] == f)
                       for f in ("ok", "non-monotone", "fail")}}
    text = json.dumps(out, indent=2) + "\n"
    if given.get("report"):
        with open(given["report"], "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    bad = out["summary"]["fail"] + out["summary"]["non-monotone"]
    sys.exit(1 if bad or not table else 0)


if __name__ == "__main__":
    main()
