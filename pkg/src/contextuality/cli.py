"""Command-line front end: ``contextuality <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as bnd
from . import cbd
from .csw import csw_report, load_graph
from .hierarchy import classify, contextual_fraction, postselected_fractions
from .noise import KINDS, default_lift, make_channel, pm_noise_curve, reference_curve
from .quantum import (PRESETS, is_jointly_measurable, kcbs_correlator_sum, model_from_quantum,
                      pm_value, preset_model, unsharp_pauli_povm)
from .scenario import (EmpiricalModel, ModelFormatError, load_model, model_to_dict,
                       signalling_deficit, validate_model)

FIXTURES = Path(__file__).with_name("fixtures")


class CliError(Exception):
    pass


@dataclass
class RunReport:
    subcommand: str
    parameters: dict
    input_digest: str | None = None
    results: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    timings: dict | None = None
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(_plain(asdict(self)), indent=2, sort_keys=True)


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def num(value, tolerance):
    """A numeric result together with the tolerance it was checked against."""
    return {"value": value, "tolerance": tolerance}


def _digest(*paths) -> str | None:
    paths = [p for p in paths if p]
    if not paths:
        return None
    h = hashlib.sha256()
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def _fmt(v) -> str:
    if isinstance(v, dict) and "value" in v:
        return _fmt(v["value"])
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


# ----------------------------------------------------------------- commands

def cmd_analyze(args) -> RunReport:
    model = load_model(args.model, exact=args.exact, tolerance=args.tolerance)
    rep = RunReport("analyze", {"model": str(args.model), "exact": args.exact,
                                "tolerance": args.tolerance}, _digest(args.model))
    problems = validate_model(model)
    rep.results["violations"] = problems
    if problems:
        raise CliError("invalid model:\n  " + "\n  ".join(problems), rep)
    t0 = time.perf_counter()
    verdict = classify(model)
    frac = contextual_fraction(model)
    deficit = signalling_deficit(model)
    rep.results.update({
        "level": verdict.level,
        "witnesses": [w if isinstance(w, str) else {"context": list(model.scenario.contexts[w[0]]),
                                                     "tuple": list(w[1])} for w in verdict.witnesses],
        "contextual_fraction": num(frac.cf, 0 if model.exact else 1e-8),
        "noncontextual_fraction": num(frac.ncf, 0 if model.exact else 1e-8),
        "signalling_deficit": num(deficit, args.tolerance),
    })
    if args.postselect:
        rep.results["postselected_cf"] = [
            {"context": list(model.scenario.contexts[i]), "tuple": list(s), "cf": cf}
            for (i, s), cf in postselected_fractions(model).items()]
    rep.timings = {"analysis_s": time.perf_counter() - t0}
    return rep


def _text_analyze(rep):
    r = rep.results
    lines = [f"level: {r['level']}",
             f"contextual fraction: {_fmt(r['contextual_fraction'])}",
             f"signalling deficit: {_fmt(r['signalling_deficit'])}"]
    for w in r["witnesses"]:
        if isinstance(w, dict):
            lines.append("unextendable section: " + ", ".join(
                f"{x}={o}" for x, o in zip(w["context"], w["tuple"])))
        else:
            lines.append(f"witness: {w}")
    for p in r.get("postselected_cf", []):
        lines.append(f"post-selected on {p['context']}={p['tuple']}: cf {_fmt(p['cf'])}")
    return lines


def cmd_csw(args) -> RunReport:
    if args.preset:
        if args.preset != "kcbs":
            raise CliError(f"unknown csw preset {args.preset!r}; only 'kcbs' is built in")
        model = model_from_quantum(preset_model("kcbs"))
        graph = load_graph(FIXTURES / "kcbs_pentagon_graph.json", model)
        digest = None
    else:
        if not (args.model and args.graph):
            raise CliError("csw needs MODEL and GRAPH files, or --preset kcbs")
        model = load_model(args.model, tolerance=args.tolerance)
        problems = validate_model(model)
        if problems:
            raise CliError("invalid model:\n  " + "\n  ".join(problems))
        graph = load_graph(args.graph, model)
        digest = _digest(args.model, args.graph)
    rep = RunReport("csw", {"model": str(args.model), "graph": str(args.graph), "preset": args.preset,
                            "sdp_tolerance": args.sdp_tolerance}, digest)
    t0 = time.perf_counter()
    event = csw_report(model, graph, tolerance=args.sdp_tolerance)
    two = csw_report(model, graph, two_point=True, tolerance=args.sdp_tolerance)
    rep.results = {
        "alpha": num(event.alpha, 1e-12),
        "independent_set": event.independent_set,
        "theta": num(event.theta, args.sdp_tolerance),
        "S": num(event.value, args.tolerance),
        "S_two_point": num(two.value, args.tolerance),
        "exceeds_alpha": event.exceeds_classical,
        "exceeds_theta": event.exceeds_quantum,
    }
    rep.timings = {"analysis_s": time.perf_counter() - t0}
    return rep


def _text_csw(rep):
    r = rep.results
    return [f"alpha: {_fmt(r['alpha'])}  (independent set {r['independent_set']})",
            f"theta: {_fmt(r['theta'])}",
            f"S: {_fmt(r['S'])}   two-point S: {_fmt(r['S_two_point'])}",
            f"S > alpha (contextual): {r['exceeds_alpha']}",
            f"S > theta (beyond quantum): {r['exceeds_theta']}"]


def cmd_cbd(args) -> RunReport:
    path = args.csv or FIXTURES / "kirchmair.csv"
    system = cbd.ingest_expectations(Path(path), correlators=Path(args.correlators) if args.correlators else None)
    rep = RunReport("cbd", {"csv": str(path), "correlators": args.correlators, "lp": not args.no_lp},
                    _digest(path, args.correlators))
    t0 = time.perf_counter()
    d0 = cbd.delta0(system)
    a = [system.correlators[c] for c in system.contexts]
    rep.results = {"shape": cbd.shape(system), "delta0": num(d0, 1e-12),
                   "s_odd": num(cbd.s_odd(a), 1e-12)}
    rep.metadata["notes"] = list(system.notes)
    if cbd.shape(system) is not None:
        dm = cbd.delta_min(system)
        c, contextual = cbd.cntx(system)
        rep.results.update({"delta_min": num(dm, 1e-12), "cntx": num(c, 1e-12),
                            "contextual": contextual})
    if not args.no_lp:
        try:
            joints = cbd.synthetic_joints(system)
            lp = cbd.coupling_lp(system, joints, synthetic=True)
            rep.results["delta_min_lp"] = num(lp.value, 1e-6)
            rep.results["lp_atoms"] = lp.atoms
            rep.metadata["synthetic_joints"] = True
        except ValueError as exc:
            rep.results["delta_min_lp"] = None
            rep.metadata["lp_skipped"] = str(exc)
    rep.timings = {"analysis_s": time.perf_counter() - t0}
    return rep


def _text_cbd(rep):
    r = rep.results
    lines = [f"delta0: {_fmt(r['delta0'])}", f"s_odd: {_fmt(r['s_odd'])}"]
    if "delta_min" in r:
        lines += [f"delta_min: {_fmt(r['delta_min'])}", f"CNTX: {_fmt(r['cntx'])}",
                  f"contextual: {r['contextual']}"]
    else:
        lines.append("no closed form for this shape")
    if r.get("delta_min_lp") is not None:
        lines.append(f"delta_min (coupling LP, synthetic joints): {_fmt(r['delta_min_lp'])}")
    for n in rep.metadata.get("notes", []):
        lines.append(f"note: {n}")
    return lines


def _parse_grid(text: str):
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return list(np.linspace(float(lo), float(hi), int(n)))
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise CliError(f"cannot read grid {text!r}; use lo:hi:n or a comma list") from None


def cmd_simulate(args) -> RunReport:
    if args.preset not in PRESETS:
        raise CliError(f"unknown preset {args.preset!r}; choose from {PRESETS}")
    kind = args.channel
    params = {"preset": args.preset, "channel": kind, "p": args.p, "grid": args.grid,
              "ordering": args.ordering, "layout": args.layout, "shots": args.shots, "seed": args.seed}
    rep = RunReport("simulate", params)
    n_qubits = {"pm": 2, "chsh-pi3": 2}.get(args.preset)
    lift = args.lift or (default_lift(kind) if kind else None)
    rep.metadata = {"ordering": args.ordering, "layout": args.layout,
                    "channel_placement": "between measurements" + (" and before the first" if args.prep_noise else ""),
                    "lift": lift, "mode": "sampled" if args.shots else "exact trace arithmetic"}
    t0 = time.perf_counter()
    if args.grid is not None:
        if args.preset != "pm" or not kind:
            raise CliError("noise curves need --preset pm and --channel")
        curve = pm_noise_curve(kind, _parse_grid(args.grid), ordering=args.ordering, layout=args.layout,
                               lift=lift, prep_noise=args.prep_noise)
        ref = reference_curve(kind, [p for p, _ in curve])
        rep.results["curve"] = [{"p": p, "value": v} for p, v in curve]
        rep.results["reference_max_deviation"] = num(float(np.abs(np.array([v for _, v in curve]) - ref).max()), 1e-9)
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["p", "value", "kind", "ordering"])
                for p, v in curve:
                    w.writerow([repr(float(p)), repr(float(v)), kind, args.ordering])
        if args.svg:
            write_curve_svg(args.svg, {kind: curve}, {kind: ref})
    else:
        p = args.p or 0.0
        channel = None
        if kind:
            if n_qubits is None:
                if args.lift:
                    raise CliError("the KCBS qutrit has no qubit lift; noise applies to qubit presets")
                raise CliError("channels act on qubits; the kcbs preset is noiseless")
            channel = make_channel(kind, p, n_qubits, lift)
        qm = preset_model(args.preset, channel, args.ordering, args.layout, args.prep_noise)
        model = model_from_quantum(qm)
        if args.shots:
            model = _sample(model, args.shots, np.random.default_rng(args.seed))
        rep.results["model"] = model_to_dict(model)
        rep.results["signalling_deficit"] = num(signalling_deficit(model), 1e-10)
        if args.preset == "pm":
            rep.results["S"] = num(pm_value(qm), 1e-9)
        elif args.preset == "kcbs":
            rep.results["correlator_sum"] = num(kcbs_correlator_sum(qm), 1e-9)
            rep.results["S"] = num(sum(float(model.prob(i, "01")) for i in range(5)), 1e-9)
        if args.out:
            Path(args.out).write_text(json.dumps(_plain(model_to_dict(model)), indent=1) + "\n")
    rep.timings = {"analysis_s": time.perf_counter() - t0}
    return rep


def _sample(model: EmpiricalModel, shots: int, rng) -> EmpiricalModel:
    tables = []
    for t in model.tables:
        p = np.clip(t.ravel(), 0, None)
        counts = rng.multinomial(shots, p / p.sum())
        tables.append((counts / shots).reshape(t.shape))
    return EmpiricalModel(model.scenario, tuple(tables), model.tolerance)


def _text_simulate(rep):
    r = rep.results
    if "curve" in r:
        lines = [f"{'p':>6} {'value':>14}"] + [f"{c['p']:6.3f} {c['value']:14.10f}" for c in r["curve"]]
        lines.append(f"max deviation from the reference polynomial: {_fmt(r['reference_max_deviation'])}")
        return lines
    lines = []
    if "S" in r:
        lines.append(f"S: {_fmt(r['S'])}")
    if "correlator_sum" in r:
        lines.append(f"sum of adjacent correlators: {_fmt(r['correlator_sum'])}")
    lines.append(f"signalling deficit: {_fmt(r['signalling_deficit'])}")
    model = r["model"]
    for key, ctx in enumerate(model["contexts"]):
        row = model["tables"][str(key)]
        lines.append(f"{''.join(ctx):>10}: " + "  ".join(f"{t}={_fmt(v)}" for t, v in row.items()))
    return lines


def cmd_povm(args) -> RunReport:
    singles, mother = unsharp_pauli_povm(args.eta)
    ok, lam = is_jointly_measurable(mother)
    exact_marginals = all(
        np.abs(np.array(mother.marginal(i).effects) - np.array(s.effects)).max() <= 1e-12
        for i, s in enumerate(singles))
    rep = RunReport("povm", {"eta": args.eta})
    rep.results = {"jointly_measurable": ok, "min_eigenvalue": num(lam, 1e-9),
                   "threshold": 1 / np.sqrt(3), "marginals_match": exact_marginals}
    return rep


def _text_povm(rep):
    r = rep.results
    return [f"jointly measurable: {r['jointly_measurable']}",
            f"minimum mother eigenvalue: {_fmt(r['min_eigenvalue'])}",
            f"threshold eta: {_fmt(r['threshold'])}"]


def cmd_bounds(args) -> RunReport:
    rep = RunReport("bounds", {"preset": args.preset, "epsilon": args.epsilon, "r": args.r})
    if args.r is not None:
        value, contextual = bnd.operational_pm(args.r)
        rep.results["operational_pm"] = {"value": num(value, 1e-12), "contextual": contextual,
                                         "threshold_r": bnd.OPERATIONAL_THRESHOLD}
    if args.epsilon is not None:
        if args.preset:
            inst = bnd.preset(args.preset, args.epsilon)
            q = bnd.PRESETS[args.preset]["quantum_value"]
        else:
            if args.alpha is None or not args.weights:
                raise CliError("give --preset or --alpha with --weights and --multiplicities")
            inst = bnd.EpsilonOncInstance(args.alpha, tuple(args.weights), tuple(args.multiplicities or ()),
                                          args.epsilon)
            q = args.quantum_value
        bound = bnd.winter_bound(inst)
        res = {"bound": num(bound, 1e-12), "alpha": inst.alpha, "slope": inst.slope}
        if q is not None:
            res.update({"quantum_value": q, "violation": bnd.winter_verdict(q, inst)})
        rep.results["winter"] = res
    if not rep.results:
        raise CliError("bounds needs --epsilon (with a preset or instance) and/or --r")
    return rep


def _text_bounds(rep):
    lines = []
    r = rep.results
    if "winter" in r:
        w = r["winter"]
        lines.append(f"corrected bound: {_fmt(w['bound'])} (alpha {w['alpha']}, slope {w['slope']})")
        if "violation" in w:
            lines.append(f"quantum value {w['quantum_value']} violates it: {w['violation']}")
    if "operational_pm" in r:
        o = r["operational_pm"]
        lines.append(f"9 r^2 = {_fmt(o['value'])}; contextual: {o['contextual']}")
    return lines


# ----------------------------------------------------------------- plotting

def write_curve_svg(path, curves: dict, references: dict | None = None):
    """Static line chart of PM noise curves (value against p)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "contextuality"
    fig, ax = plt.subplots(figsize=(6, 4))
    for kind, curve in curves.items():
        ps = [p for p, _ in curve]
        ax.plot(ps, [v for _, v in curve], marker="o", ms=3, label=f"{kind} (simulated)")
        if references and kind in references:
            ax.plot(ps, references[kind], ls="--", lw=1, label=f"{kind} (reference)")
    ax.axhline(4, color="grey", lw=0.8, ls=":", label="noncontextual bound")
    ax.set_xlabel("p")
    ax.set_ylabel(r"$\langle \chi_{PM} \rangle$")
    ax.set_xlim(0, 1)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ----------------------------------------------------------------- parser

COMMANDS = {
    "analyze": (cmd_analyze, _text_analyze),
    "csw": (cmd_csw, _text_csw),
    "cbd": (cmd_cbd, _text_cbd),
    "simulate": (cmd_simulate, _text_simulate),
    "povm": (cmd_povm, _text_povm),
    "bounds": (cmd_bounds, _text_bounds),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the run report as JSON")
    common.add_argument("--tolerance", type=float, default=1e-9, help="numerical tolerance (default 1e-9)")
    common.add_argument("--exact", action="store_true", help="rational arithmetic where supported")
    common.add_argument("--seed", type=int, default=0, help="seed for sampling mode")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")

    parser = argparse.ArgumentParser(prog="contextuality", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="hierarchy, contextual fraction, signalling")
    p.add_argument("model", help="JSON empirical model")
    p.add_argument("--postselect", action="store_true", help="also report post-selected fractions")

    p = sub.add_parser("csw", parents=[common], help="graph bounds and CSW value")
    p.add_argument("model", nargs="?")
    p.add_argument("graph", nargs="?")
    p.add_argument("--preset", choices=["kcbs"])
    p.add_argument("--sdp-tolerance", type=float, default=1e-5)

    p = sub.add_parser("cbd", parents=[common], help="Contextuality-by-Default on expectation data")
    p.add_argument("csv", nargs="?", help="expectation CSV (default: bundled trapped-ion data)")
    p.add_argument("--correlators", help="separate context,correlator CSV")
    p.add_argument("--no-lp", action="store_true", help="skip the coupling LP cross-check")

    p = sub.add_parser("simulate", parents=[common], help="quantum presets with noise")
    p.add_argument("--preset", required=True, choices=PRESETS)
    p.add_argument("--channel", choices=KINDS)
    p.add_argument("--p", type=float, help="noise strength")
    p.add_argument("--grid", help="noise curve grid lo:hi:n or comma list (pm only)")
    p.add_argument("--ordering", choices=["row-major", "reordered"], default="row-major")
    p.add_argument("--layout", choices=["table", "kirchmair"], default=None)
    p.add_argument("--lift", choices=["independent", "global"])
    p.add_argument("--prep-noise", action="store_true", help="also apply the channel to the prepared state")
    p.add_argument("--shots", type=int, help="sample this many runs per context")
    p.add_argument("--out", help="write the empirical model JSON here")
    p.add_argument("--csv", help="write the noise curve CSV here")
    p.add_argument("--svg", help="write the noise curve SVG here")

    p = sub.add_parser("povm", parents=[common], help="joint measurability of unsharp Paulis")
    p.add_argument("--eta", type=float, required=True)

    p = sub.add_parser("bounds", parents=[common], help="corrected noncontextual bounds")
    p.add_argument("--preset", choices=sorted(bnd.PRESETS))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--weights", type=float, nargs="+")
    p.add_argument("--multiplicities", type=int, nargs="+")
    p.add_argument("--quantum-value", type=float)
    p.add_argument("--r", type=float, help="visibility for the operational PM criterion")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.layout is None:
        args.layout = "kirchmair" if args.grid is not None else "table"
    run, text = COMMANDS[args.command]
    try:
        rep = run(args)
    except CliError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 1
    except (ModelFormatError, cbd.CbdFormatError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not args.timings:
        rep.timings = None
    if args.json:
        print(rep.to_json())
    else:
        print("\n".join(text(rep)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
