"""Config-driven command line: solve one run, verify invariant suites, or
sweep a parameter study, with reproducible file outputs."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # stdlib from 3.11 on
    import tomli as tomllib

import numpy as np

from .averaging import (BOUNDARY_CONSISTENT, REDISTRIBUTE, QuadratureSpec,
                        RadiusSpec, SigmaOperator, adjacent_pairs,
                        build_operator, sigma_lipschitz_probe)
from .expressions import point_function
from .field import (BoundaryData, GridField, sup_diff, sup_norm, write_csv,
                    write_pgm)
from .geometry import (STRONGLY_CONVEX, DomainSpec, GridSpec, NodeMask,
                       build_mask, classify_convexity, signed_distance)
from .iteration import (BarrierMonitor, Monitors, StopRule,
                        fixed_point_residual, run)
from .oracles import (OracleSolution, barrier, barrier_constant, bump,
                      fundamental_shifted, graph_samples, harmonic_poly,
                      hull_membership, HullWitness, linear_1d,
                      poisson_solution)

_SCHEMA_VERSION = 1
_VERDICT_EXIT = {"converged": 0, "max_iter": 2, "stalled": 3}
_EXIT_CONFIG = 1
_EXIT_ASSERTION = 4

SUITE_NAMES = ("lemma1", "eq8", "barrier", "hull", "fixedpoint")

# dimension-matched probe fields for the continuity-ratio suite
_PROBES = {
    1: ("x**2", "x * (1 - x)", "abs(x - 0.3)"),
    2: ("x**2 - y**2", "x * y", "abs(x) + y / 5"),
    3: ("x**2 - y**2", "x * y + z", "abs(x) + y / 5 + z / 7"),
}


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


# --------------------------------------------------------------------------
# config parsing


def _check_keys(table: dict, allowed: tuple[str, ...], path: str) -> None:
    for key in table:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown key: {where}")


def _section(cfg: dict, name: str, allowed: tuple[str, ...],
             required: bool = True) -> dict:
    table = cfg.get(name)
    if table is None:
        if required:
            raise ConfigError(f"missing section [{name}]")
        return {}
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] must be a table")
    _check_keys(table, allowed, name)
    return table


def _num(table: dict, key: str, path: str, default=None) -> float:
    if key not in table:
        if default is None:
            raise ConfigError(f"missing key: {path}.{key}")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    return float(v)

def _integer(table: dict, key: str, path: str, default=None) -> int:
    if key not in table:
        if default is None:
            raise ConfigError(f"missing key: {path}.{key}")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer")
    return v


def _text(table: dict, key: str, path: str, default=None) -> str:
    if key not in table:
        if default is None:
            raise ConfigError(f"missing key: {path}.{key}")
        return default
    v = table[key]
    if not isinstance(v, str):
        raise ConfigError(f"{path}.{key}: expected a string")
    return v


def _flag(table: dict, key: str, path: str, default: bool = False) -> bool:
    v = table.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"{path}.{key}: expected true/false")
    return v


def _numbers(table: dict, key: str, path: str) -> tuple[float, ...]:
    if key not in table:
        raise ConfigError(f"missing key: {path}.{key}")
    v = table[key]
    if not isinstance(v, list) or not v or any(
            isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
        raise ConfigError(f"{path}.{key}: expected a list of numbers")
    return tuple(float(x) for x in v)


def _integers(table: dict, key: str, path: str) -> tuple[int, ...]:
    if key not in table:
        raise ConfigError(f"missing key: {path}.{key}")
    v = table[key]
    if not isinstance(v, list) or not v or any(
            isinstance(x, bool) or not isinstance(x, int) for x in v):
        raise ConfigError(f"{path}.{key}: expected a list of integers")
    return tuple(v)


@dataclass(frozen=True)
class OutputPaths:
    """Where a run writes its artifacts; unset paths suppress the file."""

    field_csv: str | None = None
    report_json: str | None = None
    image_pgm: str | None = None
    study_csv: str | None = None
    record_timing: bool = False


@dataclass(frozen=True)
class RunConfig:
    """One fully validated run description.

    ``init`` and ``raw`` keep the validated table contents; everything else
    is already constructed. ``raw`` is echoed verbatim into reports so a
    report identifies its run.
    """

    domain: DomainSpec
    grid: GridSpec
    radius: RadiusSpec
    quad: QuadratureSpec
    scheme: str
    boundary: BoundaryData
    init: dict
    oracle: OracleSolution | None
    stop: StopRule
    barrier_enabled: bool
    outputs: OutputPaths
    raw: dict


def _parse_domain(cfg: dict) -> DomainSpec:
    t = _section(cfg, "domain", ("kind", "center", "radii", "exponent"))
    kind = _text(t, "kind", "domain")
    center = _numbers(t, "center", "domain")
    radii = _numbers(t, "radii", "domain")
    exponent = _num(t, "exponent", "domain", default=2.0)
    return DomainSpec(kind=kind, center=center, radii=radii, exponent=exponent)


def _parse_grid(cfg: dict) -> GridSpec:
    t = _section(cfg, "grid", ("lo", "hi", "shape"))
    return GridSpec(lo=_numbers(t, "lo", "grid"), hi=_numbers(t, "hi", "grid"),
                    shape=_integers(t, "shape", "grid"))


def _parse_radius(cfg: dict) -> RadiusSpec:
    t = _section(cfg, "radius", ("kind", "c", "cap"))
    default_kind = "capped_fraction" if "cap" in t else "distance_fraction"
    kind = _text(t, "kind", "radius", default=default_kind)
    cap = _num(t, "cap", "radius", default=0.0) if "cap" in t else None
    return RadiusSpec(kind=kind, c=_num(t, "c", "radius"), cap=cap)


def _parse_quadrature(cfg: dict) -> QuadratureSpec:
    t = _section(cfg, "quadrature",
                 ("kind", "samples_per_axis", "samples", "seed"),
                 required=False)
    return QuadratureSpec(
        kind=_text(t, "kind", "quadrature", default="product_midpoint"),
        samples_per_axis=_integer(t, "samples_per_axis", "quadrature", 16),
        samples=_integer(t, "samples", "quadrature", 512),
        seed=_integer(t, "seed", "quadrature", 0))


def _parse_scheme(cfg: dict) -> str:
    t = _section(cfg, "operator", ("scheme",), required=False)
    scheme = _text(t, "scheme", "operator", default=BOUNDARY_CONSISTENT)
    if scheme not in (BOUNDARY_CONSISTENT, REDISTRIBUTE):
        raise ConfigError(f"operator.scheme: unknown scheme {scheme!r}")
    return scheme


def _parse_boundary(cfg: dict, domain: DomainSpec) -> BoundaryData:
    t = _section(cfg, "boundary",
                 ("kind", "expression", "value", "params", "values",
                  "smoothness"))
    kind = _text(t, "kind", "boundary")
    if kind == "constant":
        _check_keys(t, ("kind", "value", "smoothness"), "boundary")
        return BoundaryData.constant(_num(t, "value", "boundary"))
    if kind == "expression":
        _check_keys(t, ("kind", "expression", "smoothness"), "boundary")
        return BoundaryData.from_expression(
            _text(t, "expression", "boundary"), domain,
            smoothness=_text(t, "smoothness", "boundary", "continuous"))
    if kind == "samples":
        _check_keys(t, ("kind", "params", "values"), "boundary")
        return BoundaryData.from_samples(
            np.asarray(_numbers(t, "params", "boundary")),
            np.asarray(_numbers(t, "values", "boundary")), domain)
    raise ConfigError(f"boundary.kind: unknown kind {kind!r}")


def _parse_init(cfg: dict) -> dict:
    t = _section(cfg, "init",
                 ("kind", "expression", "center", "width", "height"),
                 required=False)
    kind = _text(t, "kind", "init", default="zero")
    if kind == "zero":
        _check_keys(t, ("kind",), "init")
        return {"kind": kind}
    if kind == "expression":
        _check_keys(t, ("kind", "expression"), "init")
        return {"kind": kind, "expression": _text(t, "expression", "init")}
    if kind == "oracle":
        _check_keys(t, ("kind",), "init")
        return {"kind": kind}
    if kind == "oracle_plus_bump":
        _check_keys(t, ("kind", "center", "width", "height"), "init")
        return {"kind": kind, "center": _numbers(t, "center", "init"),
                "width": _num(t, "width", "init"),
                "height": _num(t, "height", "init")}
    raise ConfigError(f"init.kind: unknown kind {kind!r}")


def _parse_oracle(cfg: dict, domain: DomainSpec,
                  boundary: BoundaryData) -> OracleSolution | None:
    t = _section(cfg, "oracle", ("kind", "degree", "a", "b", "pole"),
                 required=False)
    kind = _text(t, "kind", "oracle", default="none")
    if kind == "none":
        _check_keys(t, ("kind",), "oracle")
        return None
    if kind == "poisson":
        _check_keys(t, ("kind",), "oracle")
        return poisson_solution(boundary, domain)
    if kind == "harmonic_poly":
        _check_keys(t, ("kind", "degree"), "oracle")
        return harmonic_poly(_integer(t, "degree", "oracle"), n=domain.dim)
    if kind == "linear":
        _check_keys(t, ("kind", "a", "b"), "oracle")
        return linear_1d(domain, _num(t, "a", "oracle"), _num(t, "b", "oracle"))
    if kind == "fundamental":
        _check_keys(t, ("kind", "pole"), "oracle")
        pole = _numbers(t, "pole", "oracle")
        if float(signed_distance(domain, np.asarray(pole))) >= 0.0:
            raise ConfigError("oracle.pole must lie outside the domain closure")
        return fundamental_shifted(pole, domain.dim)
    raise ConfigError(f"oracle.kind: unknown kind {kind!r}")


def _parse_stop(cfg: dict) -> StopRule:
    t = _section(cfg, "stop", ("tol", "max_iter", "stall_window"))
    return StopRule(tol=_num(t, "tol", "stop"),
                    max_iter=_integer(t, "max_iter", "stop"),
                    stall_window=_integer(t, "stall_window", "stop", 50))


def _parse_outputs(cfg: dict) -> OutputPaths:
    t = _section(cfg, "outputs",
                 ("field_csv", "report_json", "image_pgm", "study_csv",
                  "record_timing"), required=False)
    def path(key: str) -> str | None:
        return _text(t, key, "outputs") if key in t else None
    return OutputPaths(field_csv=path("field_csv"),
                       report_json=path("report_json"),
                       image_pgm=path("image_pgm"),
                       study_csv=path("study_csv"),
                       record_timing=_flag(t, "record_timing", "outputs"))


_TOP_KEYS = ("schema_version", "domain", "grid", "radius", "quadrature",
             "operator", "boundary", "init", "oracle", "stop", "barrier",
             "outputs")


def parse_config(cfg: dict) -> RunConfig:
    """Validate a parsed config table; unknown keys anywhere are errors."""
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a table")
    _check_keys(cfg, _TOP_KEYS, "")
    version = _integer(cfg, "schema_version", "")
    if version != _SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {_SCHEMA_VERSION}, "
                          f"got {version}")
    domain = _parse_domain(cfg)
    grid = _parse_grid(cfg)
    boundary = _parse_boundary(cfg, domain)
    init = _parse_init(cfg)
    oracle = _parse_oracle(cfg, domain, boundary)
    bt = _section(cfg, "barrier", ("enabled",), required=False)
    barrier_enabled = _flag(bt, "enabled", "barrier")
    config = RunConfig(domain=domain, grid=grid, radius=_parse_radius(cfg),
                       quad=_parse_quadrature(cfg), scheme=_parse_scheme(cfg),
                       boundary=boundary, init=init, oracle=oracle,
                       stop=_parse_stop(cfg), barrier_enabled=barrier_enabled,
                       outputs=_parse_outputs(cfg), raw=cfg)
    if init["kind"] in ("oracle", "oracle_plus_bump") and oracle is None:
        raise ConfigError(f"init.kind = {init['kind']!r} requires an oracle")
    if barrier_enabled and oracle is None:
        raise ConfigError("barrier.enabled requires an oracle")
    return config


def load_config(path: str) -> RunConfig:
    """Read and validate a TOML run configuration."""
    with open(path, "rb") as fh:
        return parse_config(tomllib.load(fh))


# --------------------------------------------------------------------------
# instance assembly


@dataclass
class Instance:
    """A run config realized on its grid: mask, operator, fields, monitors."""

    config: RunConfig
    mask: NodeMask
    operator: SigmaOperator
    f0: GridField
    oracle_field: GridField | None
    monitors: Monitors


def _initial_field(cfg: RunConfig, mask: NodeMask) -> GridField:
    kind = cfg.init["kind"]
    if kind == "zero":
        return GridField.constant(cfg.grid, mask, 0.0, boundary=cfg.boundary)
    if kind == "expression":
        fn = point_function(cfg.init["expression"], cfg.domain.dim)
        return GridField.from_function(cfg.grid, mask, fn,
                                       boundary=cfg.boundary)
    if kind == "oracle":
        return GridField.from_function(cfg.grid, mask, cfg.oracle,
                                       boundary=cfg.boundary)
    perturb = bump(cfg.init["center"], cfg.init["width"], cfg.init["height"])
    return GridField.from_function(
        cfg.grid, mask, lambda pts: cfg.oracle(pts) + perturb(pts),
        boundary=cfg.boundary)


def build_instance(cfg: RunConfig) -> Instance:
    """Build the mask, averaging operator, initial field and monitors."""
    mask = build_mask(cfg.domain, cfg.grid)
    op = build_operator(cfg.domain, cfg.grid, mask, cfg.radius, cfg.quad,
                        scheme=cfg.scheme)
    f0 = _initial_field(cfg, mask)
    oracle_field = None
    if cfg.oracle is not None:
        oracle_field = GridField.from_function(cfg.grid, mask, cfg.oracle,
                                               boundary=cfg.boundary)
    barrier_monitor = None
    if cfg.barrier_enabled:
        h = barrier(cfg.domain)
        k = barrier_constant(f0, oracle_field, h).value
        barrier_monitor = BarrierMonitor(
            u=oracle_field,
            h_interior=h(cfg.grid.nodes()[mask.interior]),
            K=k, tol=0.0)
    monitors = Monitors(oracle=oracle_field, barrier=barrier_monitor)
    return Instance(config=cfg, mask=mask, operator=op, f0=f0,
                    oracle_field=oracle_field, monitors=monitors)


# --------------------------------------------------------------------------
# solve


def _write_text(path: str, text: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def _config_echo(cfg: RunConfig) -> dict:
    echo = dict(cfg.raw)
    convexity = classify_convexity(cfg.domain)
    if convexity != STRONGLY_CONVEX:
        echo["notes"] = {"convexity": convexity,
                         "label": "outside strong-convexity hypotheses"}
    return echo


def cmd_solve(config_path: str, quiet: bool = False) -> int:
    """Run the averaging iteration described by a config file.

    Writes the final field CSV, the report JSON and optionally a PGM image;
    the exit code encodes the verdict (0 converged, 2 iteration budget
    exhausted, 3 stalled) and 1 flags config or I/O errors.
    """
    try:
        cfg = load_config(config_path)
        inst = build_instance(cfg)
        final, report = run(inst.f0, inst.operator, cfg.boundary, cfg.stop,
                            monitors=inst.monitors,
                            config_echo=_config_echo(cfg),
                            record_timing=cfg.outputs.record_timing)
        if cfg.outputs.field_csv:
            _ensure_parent(cfg.outputs.field_csv)
            write_csv(final, cfg.outputs.field_csv)
        if cfg.outputs.report_json:
            _write_text(cfg.outputs.report_json, report.to_json())
        if cfg.outputs.image_pgm:
            _ensure_parent(cfg.outputs.image_pgm)
            write_pgm(final, cfg.outputs.image_pgm)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    if not quiet:
        last = report.sup_diff_history[-1] if report.sup_diff_history else 0.0
        line = (f"verdict={report.verdict} iterations={report.iterations} "
                f"last_step={last:.3e}")
        if report.final_oracle_error is not None:
            line += f" oracle_error={report.final_oracle_error:.3e}"
        print(line)
    return _VERDICT_EXIT[report.verdict]


# --------------------------------------------------------------------------
# verify suites


def _suite_lemma1(inst: Instance) -> tuple[bool | None, dict]:
    """Sup-norm contraction and value-range containment on random fields."""
    op, mask, grid = inst.operator, inst.mask, inst.config.grid
    rng = np.random.default_rng(0)
    norm_margin = -np.inf
    range_margin = -np.inf
    pair_margin = -np.inf
    previous = None
    for _ in range(32):
        values = np.full(grid.node_count, np.nan)
        values[mask.live] = rng.uniform(-1.0, 1.0, size=mask.live.size)
        f = GridField(grid=grid, mask=mask, values=values)
        sf = op.apply(f)
        norm_margin = max(norm_margin, sup_norm(sf) - sup_norm(f))
        live = f.values[mask.live]
        inner = sf.values[mask.interior]
        range_margin = max(range_margin,
                           float(inner.max()) - float(live.max()),
                           float(live.min()) - float(inner.min()))
        if previous is not None:
            g, sg = previous
            pair_margin = max(pair_margin,
                              sup_diff(sf, sg) - sup_diff(f, g))
        previous = (f, sf)
    margins = {"norm_growth": float(norm_margin),
               "range_excess": float(range_margin),
               "expansion": float(pair_margin),
               "fields": 32}
    passed = max(norm_margin, range_margin, pair_margin) <= 1e-12
    return passed, margins


def _suite_eq8(inst: Instance) -> tuple[bool | None, dict]:
    """Continuity-ratio probe: finite ratios, stable across probe fields."""
    op, mask, cfg = inst.operator, inst.mask, inst.config
    pairs = adjacent_pairs(op, count=500, seed=0)
    constants = []
    for expr in _PROBES[cfg.domain.dim]:
        f = GridField.from_function(cfg.grid, mask,
                                    point_function(expr, cfg.domain.dim))
        ratios = sigma_lipschitz_probe(f, op, pairs)
        if not np.all(np.isfinite(ratios)):
            return False, {"error": f"non-finite ratio for {expr!r}"}
        constants.append(float(ratios.max()))
    mean = sum(constants) / len(constants)
    spread = max(abs(c - mean) for c in constants) / mean
    margins = {"constants": constants, "mean": mean,
               "relative_spread": spread, "pairs": 500}
    return bool(np.isfinite(mean) and spread <= 0.25), margins


def _suite_barrier(inst: Instance) -> tuple[bool | None, dict]:
    """One averaging step strictly lowers the barrier, by the predicted
    amount up to the quadrature budget."""
    cfg, op, mask = inst.config, inst.operator, inst.mask
    h = barrier(cfg.domain)
    hf = GridField.from_function(cfg.grid, mask, h)
    sh = op.apply(hf)
    interior = mask.interior
    drop = hf.values[interior] - sh.values[interior]
    super_margin = float((-drop).max())
    deviation = np.abs(drop - h.descent(op.delta))
    budget = 10.0 * op.one_step_budget()
    descent_margin = float((deviation - budget).max())
    margins = {"superharmonicity_excess": super_margin,
               "descent_deviation_minus_budget": descent_margin,
               "budget_max": float(budget.max())}
    return super_margin <= 1e-12 and descent_margin <= 0.0, margins


def _suite_hull(inst: Instance) -> tuple[bool | None, dict]:
    """Averaged graph points stay inside the hull of sampled graph points.

    Informational (never failing) on domains that are convex but not
    strongly convex; the containment is still measured and reported.
    """
    cfg, op, mask = inst.config, inst.operator, inst.mask
    sf = op.apply(inst.f0)
    count = min(2000, mask.live.size)
    samples = graph_samples(inst.f0, count, seed=0)
    rng = np.random.default_rng(1)
    queries = rng.choice(mask.interior, size=min(100, mask.interior.size),
                         replace=False)
    nodes = cfg.grid.nodes()
    worst = 0.0
    refusals = 0
    for q in queries:
        point = np.concatenate([nodes[q], [sf.values[q]]])
        result = hull_membership(samples, point, tol=1e-8)
        if isinstance(result, HullWitness):
            worst = max(worst, result.residual)
        else:
            refusals += 1
    margins = {"queries": int(queries.size), "refusals": refusals,
               "max_witness_residual": worst, "samples": count}
    if classify_convexity(cfg.domain) != STRONGLY_CONVEX:
        return None, margins
    return refusals == 0 and worst <= 1e-8, margins


def _suite_fixedpoint(inst: Instance) -> tuple[bool | None, dict]:
    """The oracle solution moves by at most the discretization budget."""
    if inst.oracle_field is None:
        raise ConfigError("the fixedpoint suite requires an oracle")
    op = inst.operator
    residual = fixed_point_residual(inst.oracle_field, op)
    budget = 10.0 * float(op.one_step_budget().max())
    margins = {"residual": float(residual), "budget": budget}
    return residual <= budget, margins


_SUITES = {"lemma1": _suite_lemma1, "eq8": _suite_eq8,
           "barrier": _suite_barrier, "hull": _suite_hull,
           "fixedpoint": _suite_fixedpoint}


def cmd_verify(config_path: str, suite: str, quiet: bool = False) -> int:
    """Run one named invariant suite on the configured instance.

    Exit 0 when the suite passes (or is informational), 4 when an assertion
    fails, 1 on config errors. Margins go to the report path when one is
    configured.
    """
    if suite not in _SUITES:
        print(f"error: unknown suite {suite!r}", file=sys.stderr)
        return _EXIT_CONFIG
    try:
        cfg = load_config(config_path)
        inst = build_instance(cfg)
        passed, margins = _SUITES[suite](inst)
        report = {"suite": suite, "passed": passed, "margins": margins,
                  "config": _config_echo(cfg)}
        if cfg.outputs.report_json:
            _write_text(cfg.outputs.report_json,
                        json.dumps(report, sort_keys=True, indent=2) + "\n")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    if not quiet:
        verdict = {True: "PASS", False: "FAIL", None: "INFO"}[passed]
        print(f"suite {suite}: {verdict} {json.dumps(margins, sort_keys=True)}")
    return 0 if passed is not False else _EXIT_ASSERTION


# --------------------------------------------------------------------------
# study


def _parse_sweep(spec: str) -> tuple[str, list]:
    if "=" not in spec:
        raise ConfigError("sweep must look like name=v1,v2,...")
    name, _, rest = spec.partition("=")
    name = name.strip()
    items = [s.strip() for s in rest.split(",") if s.strip()]
    if not items:
        raise ConfigError("sweep value list is empty")
    try:
        if name == "resolution" or name == "quad":
            values = [int(s) for s in items]
        elif name == "c":
            values = [float(s) for s in items]
        else:
            raise ConfigError(f"unknown sweep parameter {name!r}; "
                              "expected resolution, c or quad")
    except ValueError as exc:
        raise ConfigError(f"bad sweep value: {exc}") from None
    return name, values


def _swept_config(cfg: RunConfig, name: str, value) -> RunConfig:
    from dataclasses import replace

    if name == "resolution":
        grid = GridSpec(lo=cfg.grid.lo, hi=cfg.grid.hi,
                        shape=(value,) * cfg.domain.dim)
        return replace(cfg, grid=grid)
    if name == "c":
        radius = RadiusSpec(kind=cfg.radius.kind, c=value, cap=cfg.radius.cap)
        return replace(cfg, radius=radius)
    if cfg.quad.kind == "product_midpoint":
        quad = replace(cfg.quad, samples_per_axis=value)
    else:
        quad = replace(cfg.quad, samples=value)
    return replace(cfg, quad=quad)


def cmd_study(config_path: str, sweep: str, quiet: bool = False) -> int:
    """Sweep one parameter (resolution, c or quad) and tabulate, per value,
    the iterations to the stop rule, the final oracle error and the final
    one-step residual. Writes outputs.study_csv."""
    try:
        cfg = load_config(config_path)
        if cfg.outputs.study_csv is None:
            raise ConfigError("study requires outputs.study_csv")
        name, values = _parse_sweep(sweep)
        rows = ["parameter,value,iterations,final_oracle_error,"
                "one_step_residual"]
        for value in values:
            swept = _swept_config(cfg, name, value)
            inst = build_instance(swept)
            final, report = run(inst.f0, inst.operator, swept.boundary,
                                swept.stop, monitors=inst.monitors)
            residual = fixed_point_residual(final, inst.operator)
            oracle_error = (np.nan if report.final_oracle_error is None
                            else report.final_oracle_error)
            rows.append(",".join([
                name, f"{value:.17g}", str(report.iterations),
                f"{oracle_error:.17g}", f"{residual:.17g}"]))
            if not quiet:
                print(f"{name}={value}: iterations={report.iterations} "
                      f"residual={residual:.3e}")
        _write_text(cfg.outputs.study_csv, "\n".join(rows) + "\n")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    return 0


# --------------------------------------------------------------------------
# entry point


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ballaverage",
        description="Iterated ball-averaging solver for boundary value "
                    "problems on bounded domains.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the averaging iteration")
    p_solve.add_argument("--config", required=True, help="TOML run config")
    p_solve.add_argument("--quiet", action="store_true")

    p_verify = sub.add_parser("verify", help="run one invariant suite")
    p_verify.add_argument("--config", required=True, help="TOML run config")
    p_verify.add_argument("--suite", required=True, choices=SUITE_NAMES)
    p_verify.add_argument("--quiet", action="store_true")

    p_study = sub.add_parser("study", help="sweep one parameter")
    p_study.add_argument("--config", required=True, help="TOML run config")
    p_study.add_argument("--sweep", required=True,
                         help="name=v1,v2,... over resolution, c or quad")
    p_study.add_argument("--quiet", action="store_true")

    args = parser.parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args.config, quiet=args.quiet)
    if args.command == "verify":
        return cmd_verify(args.config, args.suite, quiet=args.quiet)
    return cmd_study(args.config, args.sweep, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
