"""Command-line front end.

Subcommands::

    optionwave generate  Black-Scholes price surface -> CSV
    optionwave fit       calibrate the wave model to a surface CSV -> report JSON + overlay CSV
    optionwave verify    PDE residual refinement study of one closed-form wave -> JSON
    optionwave greeks    NLS Greeks at a probe point -> CSV
    optionwave evaluate  evaluate a fitted model on a new grid (extrapolation is labelled)

Every subcommand accepts ``--config FILE`` with flat ``key = value`` lines; keys are
the long flag names with dashes or underscores. Command-line flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .blackscholes import BsParams, PriceSurface, generate_surface
from .errors import NumericError, OptionWaveError, UsageError, ValidationError
from .fitting import AMPLITUDE, ModelSpec, build_problem, default_initial, model_values
from .greeks import greeks_fd, shock_greeks_analytic
from .lm import FitReport, LmConfig, lm_fit
from .numerics import Grid1D
from .pde_verify import linear_residual, nls_residual, refinement_study
from .surface_io import fmt, ingest_market_csv, sha256_bytes, write_surface_csv
from .waves import (
    COMPONENTS,
    AdaptiveWeights,
    PacketParams,
    RogonParams,
    SolitaryParams,
    WaveParams,
    eval_general,
    eval_one_rogon,
    eval_packet,
    eval_shock,
    eval_soliton,
    eval_two_rogon,
    flatten,
    unflatten,
)

OUTPUT_DIR_ENV = "OPTIONWAVE_OUTPUT_DIR"
EXIT_IO = 5
ORDER_BAND = (1.8, 2.2)

COMPONENT_ALIASES = {
    "packet": "packet",
    "shock": "shock",
    "soliton": "soliton",
    "rogon1": "rogon1",
    "one-rogon": "rogon1",
    "rogon2": "rogon2",
    "two-rogon": "rogon2",
}


def _component(name: str) -> str:
    try:
        return COMPONENT_ALIASES[name.strip().lower()]
    except KeyError:
        raise UsageError(f"unknown component {name!r}; choose from {sorted(COMPONENT_ALIASES)}") from None


def _components(text: str) -> tuple:
    if text.strip().lower() == "all":
        return COMPONENTS
    return tuple(dict.fromkeys(_component(c) for c in text.split(",") if c.strip()))


def _output_dir(args) -> Path:
    return Path(args.output_dir or os.environ.get(OUTPUT_DIR_ENV) or ".")


def _dump_json(obj, path: Optional[Path]) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")


def _effective_config(args) -> dict:
    skip = {"func", "command"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        out[key] = value if value is None or isinstance(value, (bool, int, float, str)) else str(value)
    return out


# --------------------------------------------------------------------------- multistart


def multistart_fit(
    surface: PriceSurface,
    spec: ModelSpec,
    cfg: LmConfig,
    starts: int = 1,
    seed: int = 42,
    initial: Optional[WaveParams] = None,
) -> tuple[FitReport, WaveParams, list]:
    """Best of ``starts`` LM runs; start 0 is the unperturbed initial point.

    Other starts scale each free parameter by ``1 + U(-0.25, 0.25)`` and add
    ``U(-0.05, 0.05)``, clipped to the bounds. Ties keep the lowest start index.
    """
    if starts < 1:
        raise UsageError("starts must be at least 1")
    mp = build_problem(surface, spec, initial)
    rng = np.random.default_rng(seed)
    points = [mp.x0]
    for _ in range(1, starts):
        rel = rng.uniform(-0.25, 0.25, mp.x0.size)
        shift = rng.uniform(-0.05, 0.05, mp.x0.size)
        points.append(mp.problem.clip(mp.x0 * (1.0 + rel) + shift))
    best = None
    summary = []
    for index, x0 in enumerate(points):
        try:
            report = lm_fit(mp.problem, x0, cfg)
        except UsageError:
            # a perturbed start can land where the model is undefined; skip it
            summary.append({"index": index, "status": "invalid-start"})
            continue
        summary.append({"index": index, "status": report.status, "rmse": report.rmse, "final_cost": report.final_cost})
        if best is None or report.final_cost < best.final_cost:
            best = report
    if best is None:
        raise NumericError("no multistart run produced a valid fit")
    return best, mp.params_at(best.params), summary


def staged_fit(
    surface: PriceSurface,
    spec: ModelSpec,
    cfg: LmConfig,
    starts: int = 1,
    seed: int = 42,
) -> tuple[FitReport, WaveParams, list]:
    """Fit each component alone, then the joint model from two kinds of start.

    The warm start carries every component's fitted shape parameters, the best
    component's amplitude, and zero for the other amplitudes, so its cost equals
    the best single-component cost and LM can only lower it. The default joint
    start (with ``starts`` multistarts) often reaches a deeper basin; the lower
    final cost wins.
    """
    base = default_initial(surface, spec)
    singles = {}
    stages = []
    for comp in spec.components:
        sub = replace(spec, components=(comp,), free=None, shared_k=False)
        report, params, _ = multistart_fit(surface, sub, cfg, starts, seed, base)
        singles[comp] = (report, params)
        stages.append({"components": [comp], "rmse": report.rmse, "status": report.status})
    best_comp = min(spec.components, key=lambda c: (singles[c][0].final_cost, spec.components.index(c)))

    names, flat = flatten(base)
    index = {n: i for i, n in enumerate(names)}
    for comp, (_, params) in singles.items():
        fitted_names, fitted = flatten(params)
        for n, v in zip(fitted_names, fitted):
            if n.startswith(comp + "."):
                flat[index[n]] = v
    for comp in COMPONENTS:
        flat[index[AMPLITUDE[comp]]] = 0.0
    best_amp = AMPLITUDE[best_comp]
    flat[index[best_amp]] = flatten(singles[best_comp][1])[1][index[best_amp]]
    warm = unflatten(names, flat)
    if spec.shared_k and len(spec.components) > 1:
        # tied wave numbers cannot keep each component's own k; seed them with the best one's
        k_best = flat[index["packet.k0" if best_comp == "packet" else f"{best_comp}.k"]]
        for comp in spec.components:
            flat[index["packet.k0" if comp == "packet" else f"{comp}.k"]] = k_best
        warm = unflatten(names, flat)

    warm_fit = multistart_fit(surface, spec, cfg, 1, seed, warm)
    cold_fit = multistart_fit(surface, spec, cfg, starts, seed, base)
    for label, fit in (("warm", warm_fit), ("default", cold_fit)):
        stages.append(
            {"components": list(spec.components), "start": label, "rmse": fit[0].rmse, "status": fit[0].status}
        )
    report, params, _ = cold_fit if cold_fit[0].final_cost < warm_fit[0].final_cost else warm_fit
    return report, params, stages


# --------------------------------------------------------------------------- subcommands


def cmd_generate(args) -> int:
    p = BsParams(args.strike, args.rate, args.vol, args.expiry, args.kind)
    surface = generate_surface(p, Grid1D.parse(args.s), Grid1D.parse(args.t))
    out = Path(args.output) if args.output else _output_dir(args) / "surface.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_surface_csv(surface, out)
    prices = surface.prices
    print(f"wrote {prices.size} nodes to {out}; price range [{prices.min():.6g}, {prices.max():.6g}]")
    return 0


def _beta_source(args):
    if args.adaptive_weights:
        terms = []
        for chunk in args.adaptive_weights.split(","):
            parts = chunk.split(":")
            if len(parts) != 3:
                raise UsageError(f"adaptive weight {chunk!r} must be 'w1:w2:w3'")
            terms.append(tuple(float(x) for x in parts))
        return AdaptiveWeights(args.beta, tuple(terms))
    return args.beta


def _lm_config(args) -> LmConfig:
    return LmConfig(args.lambda0, args.nu, args.max_iter, args.ftol, args.xtol, args.fd_step)


def cmd_fit(args) -> int:
    path = Path(args.surface)
    data = path.read_bytes()
    surface = ingest_market_csv(path)
    spec = ModelSpec(
        components=_components(args.components),
        sigma=args.sigma,
        beta=_beta_source(args),
        target=args.target,
        shared_k=args.shared_k,
        packet_terms=args.packet_terms,
    )
    # fail on over-parameterisation before any optimisation
    build_problem(surface, spec)
    cfg = _lm_config(args)
    if args.staged and len(spec.components) > 1:
        report, params, stages = staged_fit(surface, spec, cfg, args.starts, args.seed)
    else:
        report, params, summary = multistart_fit(surface, spec, cfg, args.starts, args.seed)
        stages = [{"components": list(spec.components), "rmse": report.rmse, "status": report.status}]

    scale = float(surface.prices.max()) or 1.0
    s, t = surface.mesh()
    model = model_values(params, s, t, spec.target) * scale
    names, values = flatten(params)
    doc = report.to_dict()
    doc.update(
        {
            "parameters": {n: float(v) for n, v in zip(names, values)},
            "fitted": {n: float(v) for n, v in zip(report.names, report.params)},
            "target": spec.target,
            "components": list(spec.components),
            "price_scale": scale,
            "fit_domain": {
                "s": [surface.s_grid.start, surface.s_grid.stop],
                "t": [surface.t_grid.start, surface.t_grid.stop],
            },
            "stages": stages,
            "config": _effective_config(args),
            "input_hash": sha256_bytes(data),
        }
    )
    out_dir = _output_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    _dump_json(doc, out_dir / f"{args.name}_report.json")
    write_surface_csv(surface, out_dir / f"{args.name}_overlay.csv", model)
    print(f"status {report.status}; rmse {report.rmse:.6g}; wrote {out_dir / (args.name + '_report.json')}")
    return 0


def _packet_terms(text: str) -> tuple:
    terms = []
    for chunk in text.split(","):
        parts = chunk.split(":")
        if len(parts) != 2:
            raise UsageError(f"packet term {chunk!r} must be 'c:k'")
        terms.append((float(parts[0]), float(parts[1])))
    return tuple(terms)


def _component_evaluator(comp: str, args):
    """(evaluator, params) for a single closed-form component built from flags."""
    if comp == "packet":
        return eval_packet, PacketParams(args.amplitude, _packet_terms(args.terms), args.sigma)
    if comp == "shock":
        beta = args.beta if args.beta is not None else -1.0
        return eval_shock, SolitaryParams(args.sigma, beta, args.k, args.sign)
    if comp == "soliton":
        beta = args.beta if args.beta is not None else 1.0
        return eval_soliton, SolitaryParams(args.sigma, beta, args.k, args.sign)
    beta = args.beta if args.beta is not None else 0.5
    evaluator = eval_one_rogon if comp == "rogon1" else eval_two_rogon
    return evaluator, RogonParams(args.alpha, args.k, args.sigma, beta)


def cmd_verify(args) -> int:
    comp = _component(args.component)
    evaluator, params = _component_evaluator(comp, args)
    s_grid = Grid1D.parse(args.s)
    t_text = args.t or ("-2:2:201" if comp.startswith("rogon") else "0:2:201")
    t_grid = Grid1D.parse(t_text)
    # validate the domain once, before sampling large grids
    evaluator(params, 0.0, 0.0)
    if comp == "packet":
        oracle = "linear"

        def residual(f):
            return linear_residual(f, params.sigma)

    else:
        oracle = "nls"

        def residual(f):
            return nls_residual(f, params.sigma, params.beta)

    study = refinement_study(lambda s, t: evaluator(params, s, t), s_grid, t_grid, residual, args.levels)
    passed = ORDER_BAND[0] <= study.order <= ORDER_BAND[1]
    doc = {
        "component": comp,
        "oracle": oracle,
        "levels": [{"h_s": h_s, "h_t": h_t, "max_abs": m, "l2": l2} for h_s, h_t, m, l2 in study.levels],
        # an exactly zero residual has no measurable order
        "order": study.order if np.isfinite(study.order) else None,
        "order_band": list(ORDER_BAND),
        "passed": passed,
        "config": _effective_config(args),
    }
    _dump_json(doc, Path(args.output) if args.output else None)
    if not passed:
        print(f"error: convergence order {study.order:.4g} outside {ORDER_BAND}", file=sys.stderr)
        return NumericError.exit_code
    return 0


def cmd_greeks(args) -> int:
    if args.params:
        doc = json.loads(Path(args.params).read_text(encoding="utf-8"))
        try:
            mapping = doc["parameters"]
            params = unflatten(list(mapping), list(mapping.values()))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{args.params}: not a fit report ({exc})") from None
        g = greeks_fd(eval_general, params, args.at_s, args.at_t)
        method = "fd"
    else:
        comp = _component(args.component)
        evaluator, params = _component_evaluator(comp, args)
        method = args.method or ("analytic" if comp == "shock" else "fd")
        if method == "analytic":
            if comp != "shock":
                raise UsageError("analytic Greeks exist only for the shock wave; use --method fd")
            g = shock_greeks_analytic(params, args.at_s, args.at_t)
        else:
            g = greeks_fd(evaluator, params, args.at_s, args.at_t)
    lines = ["quantity,re,im,modulus"]
    lines += [",".join([name, fmt(re), fmt(im), fmt(mod)]) for name, re, im, mod in g.rows()]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)
    for flag in g.flags:
        print(f"note: {flag} ({method})", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    doc = json.loads(Path(args.report).read_text(encoding="utf-8"))
    try:
        mapping = doc["parameters"]
        params = unflatten(list(mapping), list(mapping.values()))
        t_lo, t_hi = doc["fit_domain"]["t"]
        s_lo, s_hi = doc["fit_domain"]["s"]
        scale = float(doc["price_scale"])
        target = doc["target"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{args.report}: not a fit report ({exc})") from None
    s_grid, t_grid = Grid1D.parse(args.s), Grid1D.parse(args.t)
    lines = ["s,t,model,extrapolated"]
    for t in t_grid.points():
        for s in s_grid.points():
            value = float(model_values(params, s, t, target)) * scale
            outside = not (t_lo <= t <= t_hi and s_lo <= s <= s_hi)
            lines.append(",".join([fmt(s), fmt(t), fmt(value), "1" if outside else "0"]))
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------------- parser

BOOL_KEYS = {"shared_k", "staged"}


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="optionwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value file; flags override it")
        p.set_defaults(func=func)
        subs[name] = p
        return p

    g = add("generate", cmd_generate, "write a Black-Scholes price surface CSV")
    g.add_argument("--kind", choices=("call", "put"), default="call")
    g.add_argument("--strike", type=float, default=100.0)
    g.add_argument("--rate", type=float, default=0.05)
    g.add_argument("--vol", type=float, default=0.2)
    g.add_argument("--expiry", type=float, default=1.0)
    g.add_argument("--s", default="50:150:101", help="stock grid start:stop:count")
    g.add_argument("--t", default="0:0.9:10", help="time grid start:stop:count")
    g.add_argument("--output", help=f"CSV path (default ${OUTPUT_DIR_ENV}/surface.csv)")
    g.add_argument("--output-dir")

    f = add("fit", cmd_fit, "fit the wave model to a surface CSV")
    f.add_argument("surface", help="CSV with header s,t,price")
    f.add_argument("--components", default="all", help="'all' or comma list of packet,shock,soliton,rogon1,rogon2")
    f.add_argument("--target", choices=("modulus", "pdf"), default="modulus")
    f.add_argument("--shared-k", action="store_true", help="tie the wave number k across components")
    f.add_argument("--sigma", type=float, default=0.2, help="volatility (held fixed)")
    f.add_argument("--beta", type=float, default=0.05, help="market-heat potential, or r when adaptive")
    f.add_argument("--adaptive-weights", help="w1:w2:w3 triples, comma separated")
    f.add_argument("--packet-terms", type=int, default=2)
    f.add_argument("--starts", type=int, default=1, help="seeded multistart count")
    f.add_argument("--seed", type=int, default=42)
    f.add_argument("--no-staged", dest="staged", action="store_false", help="skip single-component warm starts")
    f.add_argument("--lambda0", type=float, default=LmConfig.lambda0)
    f.add_argument("--nu", type=float, default=LmConfig.nu)
    f.add_argument("--max-iter", type=int, default=LmConfig.max_iter)
    f.add_argument("--ftol", type=float, default=LmConfig.ftol)
    f.add_argument("--xtol", type=float, default=LmConfig.xtol)
    f.add_argument("--fd-step", type=float, default=LmConfig.fd_step)
    f.add_argument("--name", default="fit", help="output file stem")
    f.add_argument("--output-dir", help=f"defaults to ${OUTPUT_DIR_ENV} or .")

    def component_flags(p, beta_help):
        p.add_argument("--component", default="shock", help="packet, shock, soliton, one-rogon, two-rogon")
        p.add_argument("--sigma", type=float, default=1.0)
        p.add_argument("--beta", type=float, default=None, help=beta_help)
        p.add_argument("--k", type=float, default=0.0)
        p.add_argument("--sign", type=int, choices=(1, -1), default=1)
        p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--amplitude", type=float, default=1.0, help="packet amplitude")
        p.add_argument("--terms", default="1:0.5,0.5:-1,0.3:1.5", help="packet c:k pairs")

    v = add("verify", cmd_verify, "PDE residual refinement study of a closed-form wave")
    component_flags(v, "default -1 (shock), 1 (soliton), 0.5 (rogons)")
    v.add_argument("--s", default="-10:10:401")
    v.add_argument("--t", default=None, help="default -2:2:201 for rogons, 0:2:201 otherwise")
    v.add_argument("--levels", type=int, default=3)
    v.add_argument("--output")

    gr = add("greeks", cmd_greeks, "NLS Greeks at one (s, t) point")
    component_flags(gr, "default -1 (shock), 1 (soliton), 0.5 (rogons)")
    gr.add_argument("--at-s", type=float, default=0.0, help="probe stock price")
    gr.add_argument("--at-t", type=float, default=0.0, help="probe time")
    gr.add_argument("--method", choices=("analytic", "fd"))
    gr.add_argument("--params", help="fit report JSON: FD Greeks of the fitted general model")
    gr.add_argument("--output")

    e = add("evaluate", cmd_evaluate, "evaluate a fitted model; rows outside the fit domain are flagged")
    e.add_argument("report")
    e.add_argument("--s", required=True)
    e.add_argument("--t", required=True)
    e.add_argument("--output")
    return parser, subs


def read_config(path) -> dict:
    values = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _apply_config(subparser: argparse.ArgumentParser, values: dict) -> None:
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in values.items():
        if key not in known or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        action = known[key]
        if key in BOOL_KEYS:
            lowered = value.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"config key {key!r} needs a boolean, got {value!r}")
            defaults[key] = lowered in ("true", "1", "yes")
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except ValueError:
                raise UsageError(f"config key {key!r}: bad value {value!r}") from None
        else:
            defaults[key] = value
    subparser.set_defaults(**defaults)
    for action in subparser._actions:
        if action.dest in defaults and action.option_strings == [] and action.nargs is None:
            action.required = False
            action.nargs = "?"


GRID_FLAGS = {"--s", "--t"}


def _join_grid_values(argv: list) -> list:
    """Turn ``--s -10:10:401`` into ``--s=-10:10:401``; argparse would read the value as a flag."""
    out = []
    i = 0
    while i < len(argv):
        if argv[i] in GRID_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and ":" in argv[i + 1]:
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = _join_grid_values(list(sys.argv[1:] if argv is None else argv))
    parser, subs = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("command", nargs="?")
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config and known.command in subs:
            _apply_config(subs[known.command], read_config(known.config))
        args = parser.parse_args(argv)
        return args.func(args)
    except OptionWaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
