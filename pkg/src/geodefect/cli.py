"""Command-line entry point.

Subcommands: ``experiment``, ``sweep``, ``check``, ``geodesic``.

Exit status: 0 on a confirmed counterexample or all checks passing, 1 when
inconclusive, 2 on an invalid construction or oracle failure, 3 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from .counterexample import (
    DEFAULT_TAUS,
    ExperimentReport,
    FamilyParams,
    Verdict,
    build_family_metric,
    run_experiment,
    sweep,
)
from .flow import DEFAULT_EPS_LADDER, flowed_metric
from .geodesic import curve_to_csv, integrate_geodesic
from .scalarfield import as_rational, format_rational

COMMANDS = ("experiment", "sweep", "check", "geodesic")
EXIT_OK, EXIT_INCONCLUSIVE, EXIT_FAILED, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n: int = 3
    s: int = 2
    t: int = 3
    amplitude: Fraction = Fraction(1)
    taus: list = field(default_factory=lambda: list(DEFAULT_TAUS))
    eps: list = field(default_factory=lambda: list(DEFAULT_EPS_LADDER))
    truncation_degree: int = 3
    format: str = "human"
    out: str | None = None
    seed: int = 0
    amplitudes: list = field(default_factory=lambda: [Fraction(1, 2), Fraction(1), Fraction(2)])
    trials: int = 50
    tensor_trials: int = 20
    x0: list | None = None
    v0: list | None = None
    duration: Fraction = Fraction(1)
    steps: int = 200

    def family(self) -> FamilyParams:
        return FamilyParams(self.n, self.s, self.t, self.amplitude)

    def echo(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, Fraction):
                d[k] = format_rational(v)
            elif isinstance(v, list):
                d[k] = [format_rational(x) if isinstance(x, Fraction) else x for x in v]
        return d


_LIST_FIELDS = {"taus", "eps", "amplitudes", "x0", "v0"}
_RATIONAL_FIELDS = {"amplitude", "duration"}
_INT_FIELDS = {"n", "s", "t", "truncation_degree", "seed", "trials", "tensor_trials", "steps"}


def _split_list(value):
    if isinstance(value, str):
        return [v for v in value.replace(",", " ").split() if v]
    if isinstance(value, (list, tuple)):
        out = []
        for v in value:
            out.extend(_split_list(v) if isinstance(v, str) else [v])
        return out
    return [value]


def _coerce(name, value):
    try:
        if name in _LIST_FIELDS:
            return [as_rational(v) for v in _split_list(value)]
        if name in _RATIONAL_FIELDS:
            return as_rational(value)
        if name in _INT_FIELDS:
            if isinstance(value, bool) or int(value) != float(value):
                raise ValueError
            return int(value)
    except (ValueError, TypeError, ZeroDivisionError):
        raise UsageError(f"invalid value for {name}: {value!r}") from None
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geodefect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--n", type=int, default=S)
    common.add_argument("--s", type=int, default=S)
    common.add_argument("--t", type=int, default=S)
    common.add_argument("--amplitude", default=S, help="free parameter A (rational, e.g. 1/2)")
    common.add_argument("--tau", dest="taus", action="append", default=S, help="flow time(s); repeatable or comma list")
    common.add_argument("--eps", action="append", default=S, help="finite-difference eps ladder")
    common.add_argument("--truncation-degree", dest="truncation_degree", type=int, default=S)
    common.add_argument("--format", choices=("human", "structured"), default=S)
    common.add_argument("--out", default=S, help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=S)
    sub.add_parser("experiment", parents=[common], help="run the refutation experiment")
    p = sub.add_parser("sweep", parents=[common], help="sweep the free parameter")
    p.add_argument("--amplitudes", action="append", default=S)
    p = sub.add_parser("check", parents=[common], help="run the oracle battery")
    p.add_argument("--trials", type=int, default=S)
    p.add_argument("--tensor-trials", dest="tensor_trials", type=int, default=S)
    p = sub.add_parser("geodesic", parents=[common], help="integrate a geodesic and export CSV")
    p.add_argument("--x0", default=S)
    p.add_argument("--v0", default=S)
    p.add_argument("--duration", default=S)
    p.add_argument("--steps", type=int, default=S)
    return parser


def parse_config(argv=None) -> RunConfig:
    """Parse flags (and an optional JSON file) into a validated :class:`RunConfig`."""
    parser = build_parser()

    def fail(message):
        raise UsageError(message)

    parser.error = fail  # type: ignore[method-assign]
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        for sp in action.choices.values():
            sp.error = fail  # type: ignore[method-assign]
    ns = vars(parser.parse_args(argv))
    command = ns.pop("command")
    config_path = ns.pop("config", None)
    values: dict = {}
    if config_path:
        try:
            data = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {config_path}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        if "tau" in data:
            data["taus"] = data.pop("tau")
        data.pop("command", None)
        unknown = set(data) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        values.update(data)
    values.update(ns)
    cfg = RunConfig(command=command)
    for k, v in values.items():
        setattr(cfg, k, _coerce(k, v))
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.n < 3:
        raise UsageError("n: must be >= 3")
    if cfg.s == 1:
        raise UsageError("s: must satisfy s != 1 (the transverse index cannot be the curve direction)")
    if not 2 <= cfg.s <= cfg.n:
        raise UsageError(f"s: must lie in 2..{cfg.n}")
    if cfg.t in (1, cfg.s) or not 1 <= cfg.t <= cfg.n:
        raise UsageError(f"t: must lie in 1..{cfg.n} with t != 1 and t != s")
    if any(e <= 0 for e in cfg.eps):
        raise UsageError("eps: values must be positive")
    if cfg.truncation_degree < 1:
        raise UsageError("truncation_degree: must be >= 1")
    if cfg.format not in ("human", "structured"):
        raise UsageError("format: must be human or structured")
    if cfg.trials < 1 or cfg.tensor_trials < 1 or cfg.steps < 1:
        raise UsageError("trials/tensor_trials/steps: must be >= 1")
    if cfg.command == "sweep" and not cfg.amplitudes:
        raise UsageError("amplitudes: need at least one value")
    for name in ("x0", "v0"):
        v = getattr(cfg, name)
        if v is not None and len(v) != cfg.n:
            raise UsageError(f"{name}: expected {cfg.n} coordinates")


# -- rendering -----------------------------------------------------------------


def _g12(q) -> str:
    return "n/a" if q is None else f"{float(q):.12g}"


def emit_report(report: ExperimentReport, fmt: str = "human", config: dict | None = None) -> str:
    if fmt == "structured":
        doc = {"config": config or {}, "report": report.to_dict()}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    p = report.params
    s = p["s"]
    lines = [
        f"geodefect experiment  n={p['n']} s={s} t={p['t']} A={p['A']}",
        f"Gamma^{s}_11(0) before flow = {report.gamma_s11_before}",
        "",
        f"delta Gamma^{s}_11(0) by method",
    ]
    labels = [
        ("covariant", "covariant_formula"),
        ("nabla_ricci", "nabla_ricci_formula"),
        ("finite_difference", "finite_difference"),
        ("covariant (linear Ricci)", "covariant_formula_linear_ricci"),
    ]
    for label, key in labels:
        v = report.delta_gamma_by_method.get(key)
        exact = "n/a" if v is None else str(v)
        lines.append(f"  delta_gamma {label} = {exact}    ({_g12(v)})")
    lines += [
        f"  display verbatim = {report.display_value_verbatim}    ({_g12(report.display_value_verbatim)})",
        f"  display corrected = {report.display_value_corrected}    ({_g12(report.display_value_corrected)})",
        f"  display verbatim, t not in {{1,s}} = {report.display_value_verbatim_restricted}",
        f"  display corrected, t not in {{1,s}} = {report.display_value_corrected_restricted}",
        f"  display / exact ratio = {report.display_ratio}",
        f"  oracle relative error = {report.oracle_relative_error!r}",
        "",
        "axis residual after flow",
        f"  {'tau':>14}  {'Gamma^s_11(0)':>18}  {'tau*deltaGamma':>18}  {'max |residual|':>18}",
    ]
    dg = report.delta_gamma_by_method.get("covariant_formula")
    for tau, entry in report.residual_after_flow.items():
        lin = None if dg is None else as_rational(tau) * dg
        lines.append(
            f"  {_g12(as_rational(tau)):>14}  {_g12(entry['origin_component_s']):>18}  {_g12(lin):>18}  {_g12(entry['max_abs']):>18}"
        )
    lines += ["", f"verdict: {report.verdict.value}"]
    lines += [f"  {d}" for d in report.diagnostics]
    return "\n".join(lines) + "\n"


def _emit_verdicts(verdicts, fmt, config) -> str:
    if fmt == "structured":
        doc = {"config": config, "checks": [v.to_dict() for v in verdicts]}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    lines = [f"{'check':<22} {'max rel err':>14} {'tolerance':>10}  result"]
    for v in verdicts:
        lines.append(
            f"{v.name:<22} {v.max_relative_error:>14.6g} {v.tolerance:>10.3g}  {'PASS' if v.passed else 'FAIL'}"
        )
    return "\n".join(lines) + "\n"


def _emit_sweep(table, fmt, config) -> str:
    if fmt == "structured":
        return json.dumps({"config": config, "sweep": table.to_dict()}, sort_keys=True, indent=2) + "\n"
    lines = [f"{'A':>10} {'full':>12} {'linear':>12} {'fd':>12} {'display':>10}  verdict"]
    for r in table.rows:
        lines.append(
            f"{r['A']:>10} {r['delta_gamma_full']:>12} {r['delta_gamma_linear']:>12} "
            f"{_g12(as_rational(r['finite_difference'])):>12} {r['display_verbatim']:>10}  {r['verdict']}"
        )
    lines.append(f"slope (full) = {table.slope_full}, max deviation = {table.deviation_full}")
    lines.append(f"slope (linear) = {table.slope_linear}, max deviation = {table.deviation_linear}")
    return "\n".join(lines) + "\n"


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write output {out}: {exc}") from None


# -- commands --------------------------------------------------------------------


def _cmd_experiment(cfg: RunConfig) -> int:
    report = run_experiment(cfg.family(), cfg.taus, cfg.eps, cfg.truncation_degree)
    _write(emit_report(report, cfg.format, cfg.echo()), cfg.out)
    return {Verdict.CONFIRMED: EXIT_OK, Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE, Verdict.INVALID: EXIT_FAILED}[
        report.verdict
    ]


def _cmd_sweep(cfg: RunConfig) -> int:
    table = sweep(cfg.amplitudes, cfg.family(), cfg.taus[:1], cfg.eps, cfg.truncation_degree)
    _write(_emit_sweep(table, cfg.format, cfg.echo()), cfg.out)
    return EXIT_OK


def _cmd_check(cfg: RunConfig) -> int:
    from .verify import run_battery

    verdicts = run_battery(cfg.seed, cfg.trials, cfg.tensor_trials)
    _write(_emit_verdicts(verdicts, cfg.format, cfg.echo()), cfg.out)
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_FAILED


def _cmd_geodesic(cfg: RunConfig) -> int:
    m = build_family_metric(cfg.family())
    origin = (Fraction(0),) * cfg.n
    # only the first tau is used; an explicit --tau 0 gives the unflowed metric
    tau = cfg.taus[0] if cfg.taus else Fraction(0)
    if tau:
        m = flowed_metric(m, tau, origin, cfg.truncation_degree)
    x0 = cfg.x0 or list(origin)
    v0 = cfg.v0 or [Fraction(1)] + [Fraction(0)] * (cfg.n - 1)
    curve = integrate_geodesic(m, x0, v0, cfg.duration, cfg.steps)
    _write(curve_to_csv(m, curve), cfg.out)
    return EXIT_OK


_DISPATCH = {
    "experiment": _cmd_experiment,
    "sweep": _cmd_sweep,
    "check": _cmd_check,
    "geodesic": _cmd_geodesic,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = parse_config(argv)
        return _DISPATCH[cfg.command](cfg)
    except UsageError as exc:
        sys.stderr.write(f"geodefect: error: {exc}\n")
        return EXIT_USAGE
    except ValueError as exc:
        sys.stderr.write(f"geodefect: error: {exc}\n")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
