"""Command-line front end.

Exit codes: 0 success, 2 bad input or unreadable file, 3 graph/data
mismatch, 4 infeasible, 5 solver or trainer failure, 6 unsupported query;
``decide`` returns 10/11/12 for Return/Observe/Collect.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import __version__
from .bounds import (
    Query,
    backdoor_point,
    graph_factorization,
    lp_bounds,
    tian_pearl_bow,
)
from .decompose import ExploreConfig, QuerySpec, explore
from .dist import Dataset, DiscreteJoint, empirical_joint
from .errors import (
    CapabilityError,
    CausalBandsError,
    InfeasibleError,
    InputError,
    MismatchError,
    OptimizationFailure,
    PositivityError,
    SolverError,
)
from .graph import Admg
from .harness import ExperimentSpec, brute_force_bounds, run_experiment
from .relaxed import RelaxedTrainConfig, relaxed_bounds
from .report import build_report, dumps, render_svg, render_text

EXIT_INPUT, EXIT_MISMATCH, EXIT_INFEASIBLE, EXIT_SOLVER, EXIT_CAPABILITY = 2, 3, 4, 5, 6
MOVE_EXIT = {"Return": 10, "Observe": 11, "Collect": 12}

DEFAULTS = {
    "alpha": 0.05,
    "eps_s": 0.01,
    "m": 200,
    "seed": 0,
    "solver": "lp",
    "format": "text",
    "treatment": "X",
    "outcome": "Y",
    "outcome_value": 1,
    "actions": None,
    "mode": "single",
    "gamma": "empirical",
    "workers": 1,
    "instrument": None,
    "eta": 0.2,
    "lr": 0.1,
    "ate_weight": 1.0,
    "max_epoch": 2000,
    "trainer_eps": 0.01,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="causalbands",
        description="Bounds on causal effects from discrete data, with sample and non-identifiability uncertainty.",
        epilog="exit codes: 0 ok, 2 bad input, 3 graph/data mismatch, 4 infeasible, 5 solver failure, "
        "6 unsupported query; decide: 10 Return, 11 Observe, 12 Collect",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True, joint=False):
        sp.add_argument("--graph", required=True, help="graph JSON")
        if data:
            sp.add_argument("--data", help="CSV of integer-coded samples")
        if joint:
            sp.add_argument("--joint", help="joint distribution JSON (instead of --data)")
        sp.add_argument("--config", help="JSON file of option values; flags win")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=["text", "json"], default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--solver", choices=["lp", "gradient", "both"], default=None)
        sp.add_argument("--treatment", default=None)
        sp.add_argument("--outcome", default=None)
        sp.add_argument("--outcome-value", dest="outcome_value", type=int, default=None)
        sp.add_argument("--actions", default=None, help="comma-separated treatment values (default: all)")
        sp.add_argument("--mode", choices=["single", "ate"], default=None)
        sp.add_argument("--eta", type=float, default=None, help="trainer parameter step")
        sp.add_argument("--lr", type=float, default=None, help="trainer dual step")
        sp.add_argument("--ate-weight", dest="ate_weight", type=float, default=None)
        sp.add_argument("--max-epoch", dest="max_epoch", type=int, default=None)
        sp.add_argument("--trainer-eps", dest="trainer_eps", type=float, default=None, help="trainer TVD slack")

    b = sub.add_parser("bounds", help="bounds for the empirical (or given) joint, no confidence set")
    common(b, joint=True)

    for name, text in (("decompose", "inner/outer decomposition over the candidate net"),
                       ("decide", "next move; exit code 10/11/12")):
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.add_argument("--plot", help="write an SVG interval plot")
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--eps-s", dest="eps_s", type=float, default=None)
        sp.add_argument("--m", type=int, default=None, help="candidate count for sampled nets")
        sp.add_argument("--gamma", default=None, help="'empirical' or a number (single mode)")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--instrument", default=None, help="reject candidates failing this instrument's inequality")

    s = sub.add_parser("simulate", help="run an experiment file")
    s.add_argument("spec", help="experiment JSON")
    s.add_argument("--out", help="output directory (overrides the experiment file)")
    s.add_argument("--format", choices=["text", "json"], default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--config", help=argparse.SUPPRESS)

    o = sub.add_parser("oracle", help="brute-force bounds next to LP bounds")
    common(o, data=False, joint=True)
    o.add_argument("--budget", type=int, default=20000, help="random points when vertex enumeration is too large")
    return p


def _options(args) -> dict:
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg = _read_json(args.config)
        if not isinstance(cfg, dict):
            raise InputError("config file must hold a JSON object")
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise InputError(f"unknown config keys {sorted(unknown)}")
        opts.update(cfg)
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            opts[k] = v
    if isinstance(opts["actions"], str):
        try:
            opts["actions"] = [int(a) for a in opts["actions"].split(",") if a.strip()]
        except ValueError:
            raise InputError(f"--actions must be comma-separated integers, got {opts['actions']!r}") from None
    return opts


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def _load_inputs(args, need_data=True):
    g = Admg.load(args.graph)
    data = joint = None
    if getattr(args, "joint", None):
        joint = DiscreteJoint.load(args.joint)
    elif getattr(args, "data", None):
        data = Dataset.from_csv(args.data, cards={n: c for n, c in g.nodes})
        joint = empirical_joint(data)
    elif need_data:
        raise InputError("one of --data or --joint is required")
    return g, data, joint


def _trainer(opts) -> RelaxedTrainConfig:
    return RelaxedTrainConfig(
        eps_s=float(opts["trainer_eps"]), ate_weight=float(opts["ate_weight"]), lr=float(opts["lr"]),
        eta=float(opts["eta"]), max_epoch=int(opts["max_epoch"]), seed=int(opts["seed"]),
    )


def _queries(g, opts):
    x, y = opts["treatment"], opts["outcome"]
    for v in (x, y):
        if v not in g.names:
            raise MismatchError(f"{v!r} is not a graph node")
    actions = opts["actions"] if opts["actions"] is not None else list(range(g.card(x)))
    if opts["mode"] == "ate":
        if g.card(x) != 2:
            raise CapabilityError("bounds command handles ATE for binary treatments; use decompose for k-ary")
        return [Query(x, a, y, 1, 1 - a) for a in actions]
    return [Query(x, a, y, int(opts["outcome_value"])) for a in actions]


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_bounds(args) -> int:
    opts = _options(args)
    g, data, joint = _load_inputs(args)
    _, residual = graph_factorization(joint, g)
    entries = []
    for q in _queries(g, opts):
        if opts["solver"] in ("lp", "both"):
            b = lp_bounds(joint, g, q, strict=False)
            entries.append({"name": q.describe(), "method": "lp", "lower": b.lower, "upper": b.upper})
        if opts["solver"] in ("gradient", "both"):
            b = relaxed_bounds(joint, g, q, _trainer(opts))
            entries.append({"name": q.describe(), "method": "gradient", "lower": b.lower, "upper": b.upper})
        bow = set(g.names) == {q.treatment, q.outcome} and g.has_bidirected(q.treatment, q.outcome)
        if bow and not q.is_ate and all(c == 2 for _, c in g.nodes):
            b = tian_pearl_bow(joint, q.action, q.outcome_value, q.treatment, q.outcome)
            entries.append({"name": q.describe(), "method": "closed_form", "lower": b.lower, "upper": b.upper})
        if not g.spouses(q.treatment) and residual <= 1e-9:
            try:
                v = backdoor_point(joint, g, q)
                entries.append({"name": q.describe(), "method": "backdoor", "lower": v, "upper": v})
            except PositivityError:
                pass
    doc = {
        "graph": list(g.names),
        "samples": None if data is None else len(data),
        "residual": residual,
        "bounds": entries,
        "seed": int(opts["seed"]),
    }
    if opts["format"] == "json":
        text = dumps(doc)
    else:
        w = max(len(e["name"]) for e in entries)
        lines = [f"{e['name'].ljust(w)}  {e['method']:<11}  [{e['lower']:.6f}, {e['upper']:.6f}]" for e in entries]
        if residual > 1e-9:
            lines.append(f"note: data break the graph's independences by {residual:.3g}; projected before solving")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0


def _explore_doc(args):
    opts = _options(args)
    if not 0 < float(opts["alpha"]) < 1 or float(opts["eps_s"]) <= 0 or int(opts["m"]) < 1:
        raise InputError("need 0 < alpha < 1, eps_s > 0 and m >= 1")
    g, data, _ = _load_inputs(args)
    if data is None:
        raise InputError("--data is required")
    gamma = opts["gamma"]
    if gamma in (None, "empirical"):
        gamma = None
    else:
        try:
            gamma = float(gamma)
        except (TypeError, ValueError):
            raise InputError(f"gamma must be 'empirical' or a number, got {gamma!r}") from None
    spec = QuerySpec(opts["treatment"], opts["outcome"], int(opts["outcome_value"]),
                     None if opts["actions"] is None else tuple(opts["actions"]), opts["mode"])
    for v in (spec.treatment, spec.outcome):
        if v not in g.names:
            raise MismatchError(f"{v!r} is not a graph node")
    cfg = ExploreConfig(float(opts["alpha"]), float(opts["eps_s"]), int(opts["m"]), int(opts["seed"]),
                        opts["solver"], gamma, int(opts["workers"]), opts["instrument"], _trainer(opts))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = explore(data, g, spec, cfg)
    echo = {k: opts[k] for k in sorted(opts) if k != "format"}
    query = {"treatment": spec.treatment, "outcome": spec.outcome, "outcome_value": spec.outcome_value,
             "mode": spec.mode, "actions": None if spec.actions is None else list(spec.actions)}
    return build_report(res, query, echo, int(opts["seed"])), opts


def cmd_decompose(args) -> int:
    doc, opts = _explore_doc(args)
    _emit(dumps(doc) if opts["format"] == "json" else render_text(doc), args.out)
    if args.plot:
        Path(args.plot).write_text(render_svg(doc))
    return 0


def cmd_decide(args) -> int:
    doc, opts = _explore_doc(args)
    if opts["format"] == "json":
        text = dumps(doc)
    else:
        d = doc["decision"]
        text = f"{d['kind']}" + (f" ({d['conclusion']})" if d.get("conclusion") else "") + f"\n{d['rationale']}\n"
    _emit(text, args.out)
    if args.plot:
        Path(args.plot).write_text(render_svg(doc))
    return MOVE_EXIT[doc["decision"]["kind"]]


def cmd_simulate(args) -> int:
    spec = ExperimentSpec.load(args.spec)
    if args.out is not None or args.seed is not None:
        d = spec.to_dict()
        if args.out is not None:
            d["out"] = args.out
        if args.seed is not None:
            d["seed"] = args.seed
        spec = ExperimentSpec.from_dict(d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_experiment(spec)
    if (args.format or "text") == "json":
        sys.stdout.write(dumps({"reports": res.reports, "claims": res.claims, "summary": list(res.rows)}))
    else:
        sys.stdout.write(res.summary_csv())
        for k, v in sorted(res.claims.items()):
            sys.stdout.write(f"# {k}: {'holds' if v else 'fails'}\n")
    return 0


def cmd_oracle(args) -> int:
    opts = _options(args)
    g, _, joint = _load_inputs(args)
    entries = []
    for q in _queries(g, opts):
        lp = lp_bounds(joint, g, q)
        bf = brute_force_bounds(joint, g, q, budget=args.budget, seed=int(opts["seed"]))
        diff = max(abs(lp.lower - bf.lower), abs(lp.upper - bf.upper))
        entries.append({"name": q.describe(), "lp": [lp.lower, lp.upper], "brute_force": [bf.lower, bf.upper],
                        "max_abs_diff": diff})
    doc = {"graph": list(g.names), "results": entries, "seed": int(opts["seed"])}
    if opts["format"] == "json":
        text = dumps(doc)
    else:
        text = "".join(
            f"{e['name']}  lp [{e['lp'][0]:.8f}, {e['lp'][1]:.8f}]  brute [{e['brute_force'][0]:.8f}, "
            f"{e['brute_force'][1]:.8f}]  diff {e['max_abs_diff']:.2e}\n" for e in entries
        )
    _emit(text, args.out)
    return 0


COMMANDS = {"bounds": cmd_bounds, "decompose": cmd_decompose, "decide": cmd_decide,
            "simulate": cmd_simulate, "oracle": cmd_oracle}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except MismatchError as exc:
        code, msg = EXIT_MISMATCH, exc
    except InfeasibleError as exc:
        code, msg = EXIT_INFEASIBLE, exc
    except (SolverError, OptimizationFailure) as exc:
        code, msg = EXIT_SOLVER, exc
    except CapabilityError as exc:
        code, msg = EXIT_CAPABILITY, exc
    except (InputError, CausalBandsError, OSError, KeyError, ValueError) as exc:
        code, msg = EXIT_INPUT, exc
    print(f"causalbands: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
