"""``odoforge <verb> --config <file> [--depth N] [--radius R] [--out DIR]``.

Exit codes: 0 every check passed, 1 some check failed, 2 some check was
inconclusive (and none failed), 3 error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import kernels
from .chains import (
    Chain,
    act_truncated,
    eigenfunction_violation,
    eigenvalue_group,
    factor_between,
    haar_cylinder,
    normal_cover,
    stabilizer_ball,
    validate_chain,
)
from .config import VERBS, RunConfig, fixture_path, load_config
from .errors import InclusionUndecided, OdoforgeError, SampleTooShallow, TranslateEscapesSpace
from .partitions import (
    WholeSpace,
    incidence_matrix,
    kr_tower_sequence,
    measure_estimate,
    sample_space,
    tower_measures,
)
from .toeplitz import (
    ExternalArray,
    ToeplitzSpec,
    build_spec,
    dump_lines,
    factor_coords,
    period_structure_check,
    toeplitz_verify,
    verify_external,
)
from .words import Word, ball_enumerate

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"


@dataclass
class Check:
    verb: str
    name: str
    status: str
    detail: dict = field(default_factory=dict)
    witness: object = None

    def __post_init__(self):
        if self.status == FAIL and self.witness is None:
            raise AssertionError(f"FAIL without a witness in {self.name}")

    def to_json(self) -> dict:
        out = {"verb": self.verb, "check": self.name, "status": self.status, "detail": self.detail}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class Report:
    command: str
    config_hash: str
    checks: list[Check] = field(default_factory=list)
    error: dict | None = None
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return 3
        statuses = {c.status for c in self.checks}
        if FAIL in statuses:
            return 1
        if INCONCLUSIVE in statuses:
            return 2
        return 0

    def body(self) -> dict:
        counts = {s: sum(c.status == s for c in self.checks) for s in (PASS, FAIL, INCONCLUSIVE)}
        body = {
            "command": self.command,
            "config_hash": self.config_hash,
            "checks": [c.to_json() for c in self.checks],
            "summary": counts,
            "exit_code": self.exit_code,
        }
        if self.error is not None:
            body["error"] = self.error
        return body

    def body_bytes(self) -> bytes:
        return _dumps(self.body()).encode()

    def to_json(self) -> str:
        body = self.body_bytes()
        doc = {
            "body": json.loads(body),
            "body_sha256": hashlib.sha256(body).hexdigest(),
            "timing_seconds": self.timing,
            "backend": kernels.BACKEND,
        }
        return json.dumps(doc, indent=2, sort_keys=True, default=_plain) + "\n"


def _plain(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}" if obj.denominator != 1 else str(obj.numerator)
    if isinstance(obj, Word):
        return str(obj)
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_plain)


def _frac(q: Fraction) -> str:
    return _plain(Fraction(q))


# -- run context ---------------------------------------------------------------

class Context:
    """Lazily built objects shared by the verbs of one run."""

    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self._chain: Chain | None = None
        self._spec: ToeplitzSpec | None = None

    @property
    def group(self):
        return self.cfg.group

    @property
    def chain(self) -> Chain:
        if self._chain is None:
            self._chain = validate_chain(self.group, self.cfg.chain_levels())
        return self._chain

    @property
    def spec(self) -> ToeplitzSpec:
        if self._spec is None:
            self._spec = build_spec(self.chain)
        return self._spec

    def window(self) -> list[Word]:
        ball = ball_enumerate(self.group, self.cfg.window_radius)
        return [w for w in ball if self.spec.in_domain(w)]

    def write(self, name: str, text: str) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(text)


# -- verbs -------------------------------------------------------------------------

def run_validate(ctx: Context) -> list[Check]:
    cfg, chain = ctx.cfg, ctx.chain
    checks = [Check("validate", "chain-nesting", PASS, {
        "indices": [chain.index(n) for n in range(chain.depth + 1)],
        "strict": list(chain.strict),
        "normal": list(chain.normal),
    })]
    extra = chain.residuality(cfg.ball_radius, chain.depth)
    checks.append(Check(
        "validate", "residuality", FAIL if extra else PASS,
        {"radius": cfg.ball_radius, "level": chain.depth, "nontrivial_elements": len(extra)},
        str(extra[0]) if extra else None,
    ))
    if not all(chain.normal):
        cover, fmap = normal_cover(chain)
        detail = {"core_indices": [cover.index(n) for n in range(cover.depth + 1)]}
        if fmap:
            detail["levels"] = list(fmap.levels)
            checks.append(Check("validate", "normal-cover", PASS, detail))
        else:
            checks.append(Check("validate", "normal-cover", FAIL, detail,
                                {"level": fmap.level, "element": str(fmap.witness)}))
    depth = min(3, chain.depth)
    short = chain.truncate(depth)
    mismatch = None
    sizes = []
    for p in short.sample_points(5):
        try:
            sizes.append(len(stabilizer_ball(short, p, cfg.test_radius)))
        except AssertionError:
            mismatch = list(p.cosets)
            break
    checks.append(Check("validate", "stabilizer-formula", FAIL if mismatch else PASS,
                        {"depth": depth, "radius": cfg.test_radius, "stabilizer_sizes": sizes},
                        mismatch))
    return checks


def run_toeplitz(ctx: Context) -> list[Check]:
    cfg, spec = ctx.cfg, ctx.spec
    window = ctx.window()
    ctx.write("array.dump", "\n".join(dump_lines(spec, window)) + "\n")
    rep = toeplitz_verify(spec, window, cfg.test_radius)
    exact = sum(spec.evaluate(w).exact for w in window)
    detail = {
        "mode": spec.mode,
        "depth": spec.depth,
        "window_size": len(window),
        "exact": exact,
        "markers": [str(v) for v in spec.markers.points] if spec.markers else None,
        "certification_levels": {str(w): n for w, n in rep.levels.items()},
        "recurrence_level": rep.recurrence_level,
    }
    witness = None
    if rep.uncertified:
        witness = {"uncertified": str(rep.uncertified[0])}
    elif rep.contradictions:
        w, t = rep.contradictions[0]
        witness = {"position": str(w), "truncation": t}
    elif not rep.recurrence_ok:
        witness = {"recurrence_level": rep.recurrence_level}
    checks = [Check("toeplitz", "toeplitz-verify", PASS if rep.passed else FAIL, detail, witness)]
    checks.append(Check("toeplitz", "exact-consistency", FAIL if rep.contradictions else PASS,
                        {"contradictions": len(rep.contradictions)},
                        [str(rep.contradictions[0][0]), rep.contradictions[0][1]] if rep.contradictions else None))
    if cfg.pattern_file:
        arr = ExternalArray.parse(Path(cfg.pattern_file).read_text(), cfg.group)
        ext = verify_external(arr, ctx.chain, window, cfg.test_radius)
        checks.append(Check("toeplitz", "external-array", PASS if ext.passed else FAIL,
                            {"sampled": True, "positions": len(window)},
                            str(ext.uncertified[0]) if ext.uncertified else None))
    return checks


def run_periods(ctx: Context) -> list[Check]:
    cfg, spec = ctx.cfg, ctx.spec
    levels = spec.depth - 1
    rep = period_structure_check(spec, levels, cfg.ball_radius)
    status = INCONCLUSIVE if rep.inconclusive else PASS
    detail = {"levels": levels, "radius": cfg.ball_radius, "witnesses": rep.witnesses,
              "in_group": rep.in_group, "inconclusive": len(rep.inconclusive)}
    if rep.inconclusive:
        n, g = rep.inconclusive[0]
        detail["first_inconclusive"] = {"level": n, "element": str(g)}
    return [Check("periods", "period-structure", status, detail)]


def run_factor(ctx: Context) -> list[Check]:
    cfg, spec, chain = ctx.cfg, ctx.spec, ctx.chain
    checks = []
    ball = ball_enumerate(cfg.group, cfg.test_radius)
    # the odometer coordinates of g . x are the cosets of g
    bad = None
    for h in ball[: 50]:
        for g in ball[: 50]:
            if factor_coords(spec, h * g) != act_truncated(chain, h, factor_coords(spec, g)):
                bad = [str(h), str(g)]
                break
        if bad:
            break
    checks.append(Check("factor", "equicontinuous-factor", FAIL if bad else PASS,
                        {"pairs": min(50, len(ball)) ** 2}, bad))
    levels = cfg.factor_levels()
    if levels is None:
        return checks
    target = validate_chain(cfg.group, levels)
    fmap = factor_between(chain, target)
    if not fmap:
        checks.append(Check("factor", "factor-map", FAIL, {"target_depth": target.depth},
                            {"level": fmap.level, "element": str(fmap.witness)}))
        return checks
    points = chain.sample_points(20)
    bad = None
    for g in ball:
        for p in points:
            if fmap.apply(act_truncated(chain, g, p)) != act_truncated(target, g, fmap.apply(p)):
                bad = {"element": str(g), "point": list(p.cosets)}
                break
        if bad:
            break
    checks.append(Check("factor", "factor-map", FAIL if bad else PASS,
                        {"levels": list(fmap.levels), "equivariance_pairs": len(ball) * len(points)}, bad))
    return checks


def run_eigen(ctx: Context) -> list[Check]:
    cfg, chain = ctx.cfg, ctx.chain
    rows = ["level,character,coordinates"]
    orders = []
    bad = None
    ball = ball_enumerate(cfg.group, cfg.test_radius)
    points = chain.sample_points(10)
    for n in range(chain.depth + 1):
        cg = eigenvalue_group(chain, n)
        orders.append(cg.order)
        for k, chi in enumerate(cg.characters):
            rows.append(f"{n},{k}," + ";".join(_frac(q) for q in chi))
        if n > 4 or bad:
            continue
        found = eigenfunction_violation(chain, cg, ball, points)
        if found:
            chi, g, p = found
            bad = {"level": n, "character": [_frac(q) for q in chi], "element": str(g),
                   "point": list(p.cosets)}
    ctx.write("characters.csv", "\n".join(rows) + "\n")
    checks = [Check("eigen", "eigenfunction-identity", FAIL if bad else PASS,
                    {"orders": orders, "levels_checked": min(chain.depth, 4)}, bad)]
    divides = [n for n in range(chain.depth + 1) if chain.index(n) % orders[n]]
    checks.append(Check("eigen", "character-order", FAIL if divides else PASS,
                        {"orders": orders, "indices": [chain.index(n) for n in range(chain.depth + 1)]},
                        {"level": divides[0]} if divides else None))
    return checks


def run_measure(ctx: Context) -> list[Check]:
    cfg, spec = ctx.cfg, ctx.spec
    levels = max(0, min(cfg.levels_for_measure, spec.depth - 2))
    names = ["column-sum", "measure-consistency", "haar-trivial", "unique-ergodicity", "separation"]
    try:
        space = sample_space(spec, spec.tower.domains[levels], domain_level=spec.depth - 1, strict=False)
        run = tower_measures(spec, levels, space, tolerance=cfg.tolerance)
        trivial = kr_tower_sequence(spec, space, levels, [WholeSpace(space)] * (levels + 1))
        trivial_mats = [incidence_matrix(trivial.partitions[n], trivial.partitions[n + 1]) for n in range(levels)]
    except (TranslateEscapesSpace, InclusionUndecided, SampleTooShallow) as exc:
        detail = {"reason": f"{type(exc).__name__}: {exc}"}
        return [Check("measure", name, INCONCLUSIVE, detail) for name in names]
    est = run.estimate
    blocks = []
    for n, m in enumerate(run.matrices):
        blocks.append(f"# A_{n} {m.shape[0]}x{m.shape[1]}")
        blocks.append(m.to_csv().rstrip("\n"))
    ctx.write("matrices.csv", "\n".join(blocks) + "\n")
    sums_ok = all(s == m.ratio for m in run.matrices for s in m.column_sums())
    checks = [Check("measure", "column-sum", PASS if sums_ok else FAIL,
                    {"matrices": len(run.matrices), "ratios": [m.ratio for m in run.matrices]},
                    None if sums_ok else {"level": next(n for n, m in enumerate(run.matrices)
                                                        if any(s != m.ratio for s in m.column_sums()))})]
    consistent = None
    for n, m in enumerate(run.matrices):
        mu, nxt = est.estimates[n].coords, est.estimates[n + 1].coords
        pushed = tuple(sum((m.entries[i][j] * nxt[j] for j in range(len(nxt))), Fraction(0))
                       for i in range(len(mu)))
        if pushed != mu:
            consistent = {"level": n}
            break
    checks.append(Check("measure", "measure-consistency", FAIL if consistent else PASS,
                        {"levels": levels}, consistent))
    haar_bad = None
    for n, part in enumerate(trivial.partitions):
        if part.k != 1:
            haar_bad = {"level": n, "k": part.k}
            break
    if haar_bad is None:
        sizes = [len(spec.tower.domains[n]) for n in range(levels + 1)]
        tri = measure_estimate(trivial_mats, sizes) if trivial_mats else None
        for n in range(levels + 1):
            got = tri.estimates[n].coords[0] if tri else Fraction(1, sizes[0])
            if got != haar_cylinder(spec.chain, n):
                haar_bad = {"level": n, "measure": _frac(got)}
                break
    checks.append(Check("measure", "haar-trivial", FAIL if haar_bad else PASS, {"levels": levels}, haar_bad))
    ue = PASS if est.uniquely_ergodic else INCONCLUSIVE
    checks.append(Check("measure", "unique-ergodicity", ue,
                        {"diameter": _frac(est.diameter), "diameter_float": float(est.diameter),
                         "tolerance": cfg.tolerance, "mode": est.mode, "label": est.label}))
    checks.append(Check("measure", "separation", PASS if run.towers.separated else FAIL,
                        {"sample_points": len(space), "dropped": space.dropped,
                         "provisional_reads": space.provisional_reads,
                         "cells": [p.k for p in run.towers.partitions]},
                        None if run.towers.separated else {"level": levels}))
    doc = {
        "mode": est.mode,
        "label": est.label,
        "tolerance": cfg.tolerance,
        "diameter": _frac(est.diameter),
        "diameter_float": float(est.diameter),
        "uniquely_ergodic": est.uniquely_ergodic,
        "intervals": [[[_frac(lo), _frac(hi)] for lo, hi in level] for level in est.intervals],
        "estimates": [[_frac(q) for q in v.coords] for v in est.estimates],
        "estimates_float": [[float(q) for q in v.coords] for v in est.estimates],
        "domain_sizes": [v.domain_size for v in est.estimates],
        "provisional_reads": space.provisional_reads,
    }
    ctx.write("measures.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return checks


RUNNERS: dict[str, Callable[[Context], list[Check]]] = {
    "validate": run_validate,
    "toeplitz": run_toeplitz,
    "periods": run_periods,
    "factor": run_factor,
    "eigen": run_eigen,
    "measure": run_measure,
}


def dispatch(cfg: RunConfig, verb: str | None = None, out: str | Path | None = None) -> Report:
    verb = verb or cfg.command
    if verb not in VERBS:
        raise ValueError(f"unknown verb {verb!r}")
    ctx = Context(cfg, Path(out if out is not None else cfg.out_dir))
    report = Report(verb, cfg.hash())
    verbs = list(RUNNERS) if verb == "all" else [verb]
    for v in verbs:
        start = time.perf_counter()
        try:
            report.checks.extend(RUNNERS[v](ctx))
        except OdoforgeError as exc:
            report.error = {"verb": v, "module": exc.module, "type": type(exc).__name__, "message": str(exc)}
            break
        finally:
            report.timing[v] = round(time.perf_counter() - start, 6)
    ctx.write("report.json", report.to_json())
    return report


def _resolve_config(arg: str) -> Path:
    path = Path(arg)
    if path.exists():
        return path
    try:
        return fixture_path(arg)
    except FileNotFoundError:
        raise FileNotFoundError(f"config {arg!r} is neither a file nor a shipped fixture") from None


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="odoforge", description=__doc__.splitlines()[0])
    parser.add_argument("verb", choices=VERBS)
    parser.add_argument("--config", required=True, help="config file or shipped fixture name")
    parser.add_argument("--depth", type=int)
    parser.add_argument("--radius", type=int, help="override the ball radius")
    parser.add_argument("--out", default=None, help="output directory (default: out)")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(_resolve_config(args.config), depth=args.depth, ball_radius=args.radius)
    except (OdoforgeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    out = args.out or cfg.out_dir
    report = dispatch(cfg, args.verb, out)
    for c in report.checks:
        print(f"{c.status:<12} {c.verb:<9} {c.name}")
    if report.error:
        e = report.error
        print(f"error [{e['module']}] {e['type']}: {e['message']}", file=sys.stderr)
    print(f"exit {report.exit_code}; report in {Path(out) / 'report.json'}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
