"""Command-line front end.

Subcommands:

* ``check``             admissibility arithmetic for the configured pair
* ``region``            CSV sweep of the admissible (diameter, period) region
* ``abstract``          build and export every agent's transition system
* ``verify``            falsification sampling against recorded transitions
* ``simulate``          one joint closed-loop run from configured states
* ``controller-dump``   reference trajectory and feedback terms as CSV
* ``validate-constants`` sample-test the declared model constants

Exit codes: 0 success, 1 falsified or not admissible, 2 input error,
3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .abstraction import (CompositionViolation, EnumerationCap, WellPosednessViolation,
                          build_transition_system, to_dot, to_json, verify_transition)
from .admissibility import (FeasibilityError, admissible_period_interval,
                            coupling_constants, diameter_upper_bound)
from .config import ConfigError, load_config
from .controller import HybridController
from .dynamics import ConstantsViolation, project_configuration, validate_constants
from .geometry import CellConfiguration
from .simulate import InputBoundViolation, integrate_closed_loop


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write(path, text):
    with open(path, "w") as handle:
        handle.write(text)


def _out_dir(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_check(cfg, args) -> int:
    params = cfg.params()
    per_agent, coupling = coupling_constants(cfg.model)
    for i, value in enumerate(per_agent):
        print(f"agent {i}: neighbors {cfg.network.degree(i)}, coupling {_fmt(value)}")
    print(f"coupling: {_fmt(coupling)}")
    bound = diameter_upper_bound(cfg.model)
    print(f"diameter: {_fmt(params.diameter)} (bound {_fmt(bound)})")
    if params.diameter <= bound:
        lo, hi = admissible_period_interval(cfg.model, params.diameter)
        print(f"period: {_fmt(params.period)} (admissible interval "
              f"[{_fmt(lo)}, {_fmt(hi)}])")
    else:
        print(f"period: {_fmt(params.period)} (no admissible interval)")
    print(f"reach_radius: {_fmt(params.reach_radius)}")
    print(f"admissible: {'yes' if params.admissible else 'no'}")
    if not params.admissible:
        print(f"reason: {params.reason}")
    return 0 if params.admissible else 1


def cmd_region(cfg, args) -> int:
    bound = diameter_upper_bound(cfg.model)
    if not np.isfinite(bound):
        raise ConfigError("the model is decoupled; every diameter is admissible")
    rows = args.samples if args.samples is not None else 200
    if rows < 1:
        raise ConfigError("region needs at least one sample")
    v = cfg.model.input_bound
    m = cfg.model.feedback_bound
    lines = ["diameter,period_min,period_max,reach_line,input_line"]
    for k in range(1, rows + 1):
        d = bound * k / rows
        lo, hi = admissible_period_interval(cfg.model, d)
        lines.append(",".join(_fmt(x) for x in (d, lo, hi, d / (m + v), d / v)))
    path = os.path.join(_out_dir(args), "region.csv")
    _write(path, "\n".join(lines) + "\n")
    print(f"wrote {rows} rows to {path}")
    return 0


def cmd_abstract(cfg, args) -> int:
    if cfg.window is None:
        raise ConfigError("abstract needs run.window in the config")
    params = cfg.params()
    if not params.admissible:
        raise FeasibilityError(f"discretization is not admissible: {params.reason}")
    out = _out_dir(args)
    for i in range(cfg.network.agent_count):
        ts = build_transition_system(cfg.model, cfg.grid, params, i, cfg.window,
                                     substeps=cfg.substeps)
        base = os.path.join(out, f"transitions_agent{i}")
        _write(base + ".json", to_json(ts))
        _write(base + ".dot", to_dot(ts))
        print(f"agent {i}: {len(ts.actions)} actions, {len(ts.transitions)} "
              f"transitions -> {base}.json")
    return 0


def _parse_selector(selector, agent_count):
    if selector == "all":
        return [(i, None) for i in range(agent_count)]
    parts = selector.split(":")
    try:
        agent = int(parts[0])
        index = int(parts[1]) if len(parts) > 1 else None
    except (ValueError, IndexError):
        raise ConfigError(f"bad selector {selector!r}; use 'all', 'AGENT', or "
                          f"'AGENT:INDEX'")
    if not 0 <= agent < agent_count:
        raise ConfigError(f"selector agent {agent} out of range")
    return [(agent, index)]


def cmd_verify(cfg, args) -> int:
    if cfg.window is None:
        raise ConfigError("verify needs run.window in the config")
    params = cfg.params()
    if not params.admissible:
        raise FeasibilityError(f"discretization is not admissible: {params.reason}")
    seed = args.seed if args.seed is not None else cfg.seed
    trials = args.trials if args.trials is not None else cfg.trials
    for agent, index in _parse_selector(args.selector, cfg.network.agent_count):
        ts = build_transition_system(cfg.model, cfg.grid, params, agent, cfg.window,
                                     substeps=cfg.substeps)
        chosen = ts.transitions
        if index is not None:
            if not 0 <= index < len(chosen):
                raise ConfigError(f"agent {agent} has {len(chosen)} transitions; "
                                  f"index {index} out of range")
            chosen = chosen[index:index + 1]
        if args.limit is not None:
            chosen = chosen[:args.limit]
        for k, transition in enumerate(chosen):
            check = verify_transition(cfg.model, cfg.grid, params, transition,
                                      cfg.window, trials=trials, seed=seed + k,
                                      substeps=cfg.substeps)
            flag = " (marginal)" if check.marginal else ""
            print(f"agent {agent} {transition.source} --{transition.action}--> "
                  f"{transition.target}: ok, {check.trials} trials, min margin "
                  f"{_fmt(check.min_margin)}{flag}")
    return 0


def cmd_simulate(cfg, args) -> int:
    if cfg.simulate is None:
        raise ConfigError("simulate needs a 'simulate' block in the config")
    params = cfg.params()
    if not params.admissible:
        raise FeasibilityError(f"discretization is not admissible: {params.reason}")
    initial = cfg.simulate["initial"]
    targets = cfg.simulate["targets"]
    count = cfg.network.agent_count

    source_cells = tuple(cfg.grid.cell_of(initial[i]) for i in range(count))
    controllers = []
    for i in range(count):
        config = project_configuration(cfg.network, source_cells, i)
        controller = HybridController(cfg.model, cfg.grid, params, config,
                                      substeps=cfg.substeps)
        if controller.target_cell() != targets[i]:
            raise ConfigError(f"agent {i}: declared target {targets[i]} is not the "
                              f"constructive successor {controller.target_cell()}")
        controllers.append(controller)

    trajectory, report = integrate_closed_loop(cfg.model, controllers, initial,
                                               substeps=cfg.substeps)
    out = _out_dir(args)
    n = cfg.network.dimension
    header = ["t"] + [f"x{i}_{d}" for i in range(count) for d in range(n)]
    rows = [",".join(header)]
    for k, t in enumerate(trajectory.times):
        flat = trajectory.states[k].reshape(-1)
        rows.append(",".join([_fmt(t)] + [_fmt(v) for v in flat]))
    _write(os.path.join(out, "trajectory.csv"), "\n".join(rows) + "\n")

    landed = tuple(cfg.grid.cell_of(trajectory.states[-1, i]) for i in range(count))
    success = all(landed[i] == tuple(targets[i]) for i in range(count))
    lines = [f"agents: {count}",
             f"period: {_fmt(params.period)}",
             f"substeps: {cfg.substeps}",
             f"landed: {'true' if success else 'false'}"]
    for i in range(count):
        lines += [f"agent_{i}_target: {tuple(targets[i])}",
                  f"agent_{i}_endpoint_cell: {landed[i]}",
                  f"agent_{i}_max_input: {_fmt(report.max_input[i])}",
                  f"agent_{i}_containment: {'true' if report.containment_ok[i] else 'false'}",
                  f"agent_{i}_endpoint_deviation: {_fmt(report.endpoint_deviation[i])}",
                  f"agent_{i}_interpolation_deviation: "
                  f"{_fmt(report.interpolation_deviation[i])}"]
    _write(os.path.join(out, "report.txt"), "\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if success else 1


def cmd_controller_dump(cfg, args) -> int:
    if cfg.controller_dump is None:
        raise ConfigError("controller-dump needs a 'controller_dump' block in the config")
    params = cfg.params()
    block = cfg.controller_dump
    agent = block["agent"]
    config = CellConfiguration(agent=agent, cells=tuple(block["cells"]))
    controller = HybridController(cfg.model, cfg.grid, params, config,
                                  substeps=cfg.substeps)
    start = block["initial"]
    if start is None:
        start = controller.own_reference
    elif cfg.grid.cell_of(start) != config.own:
        raise ConfigError(f"controller_dump.initial lies in cell "
                          f"{cfg.grid.cell_of(start)}, not the declared {config.own}")

    homing = controller.offset_homing(start)
    offset = float(np.linalg.norm(start - controller.own_reference))
    n = cfg.network.dimension
    header = (["t"] + [f"ref_{d}" for d in range(n)]
              + [f"homing_{d}" for d in range(n)] + ["drift_bound"])
    rows = [",".join(header)]
    times = controller.knots
    refs = controller.reference(times)
    for k, t in enumerate(times):
        drift_bound = cfg.model.self_lipschitz * (1.0 - t / params.period) * offset
        rows.append(",".join([_fmt(t)] + [_fmt(v) for v in refs[k]]
                             + [_fmt(v) for v in homing] + [_fmt(drift_bound)]))
    path = os.path.join(_out_dir(args), f"controller_agent{agent}.csv")
    _write(path, "\n".join(rows) + "\n")
    print(f"wrote {len(times)} samples to {path}")
    return 0


def cmd_validate_constants(cfg, args) -> int:
    trials = args.trials if args.trials is not None else 10000
    seed = args.seed if args.seed is not None else cfg.seed
    report = validate_constants(cfg.model, trials=trials, seed=seed)
    print(f"trials: {report.trials}")
    print(f"worst_bound_ratio: {_fmt(report.worst_bound_ratio)}")
    print(f"worst_neighbor_ratio: {_fmt(report.worst_neighbor_ratio)}")
    print(f"worst_self_ratio: {_fmt(report.worst_self_ratio)}")
    print("ok" if report.ok else "violated")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridabs",
        description="Finite transition-system abstractions for interconnected "
                    "single-integrator agents on a uniform grid.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to the YAML configuration")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--substeps", type=int, default=None, help="override run.substeps")
        p.add_argument("--trials", type=int, default=None, help="override run.trials")
        p.add_argument("--samples", type=int, default=None, help="override run.samples")
        p.add_argument("--out", default=None, help="output directory (default .)")

    p = sub.add_parser("check", help="admissibility arithmetic for the configured pair")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("region", help="CSV sweep of the admissible region")
    common(p)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("abstract", help="build and export transition systems")
    common(p)
    p.set_defaults(func=cmd_abstract)

    p = sub.add_parser("verify", help="falsification sampling of recorded transitions")
    common(p)
    p.add_argument("selector", nargs="?", default="all",
                   help="'all', an agent index, or AGENT:INDEX")
    p.add_argument("--limit", type=int, default=None,
                   help="check at most this many transitions per agent")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="one joint closed-loop run")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("controller-dump", help="reference trajectory and terms as CSV")
    common(p)
    p.set_defaults(func=cmd_controller_dump)

    p = sub.add_parser("validate-constants", help="sample-test declared constants")
    common(p)
    p.set_defaults(func=cmd_validate_constants)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.substeps is not None:
            if args.substeps < 1:
                raise ConfigError("--substeps must be positive")
            cfg.substeps = args.substeps
        if args.trials is not None and args.trials < 1:
            raise ConfigError("--trials must be positive")
        if args.samples is not None and args.samples < 1:
            raise ConfigError("--samples must be positive")
        return args.func(cfg, args)
    except EnumerationCap as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FeasibilityError, WellPosednessViolation, CompositionViolation,
            InputBoundViolation, ConstantsViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
