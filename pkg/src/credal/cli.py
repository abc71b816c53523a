"""Scenario runner: validation, command dispatch, bundled reproductions.

One JSON scenario format feeds every command; constraint and formula
fields are DSL strings inside the JSON.  Exit codes: 0 all checks hold,
1 some check failed (or a violation was found / expected), 2 validation
or domain error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from .constraints import TrueExpr, parse_constraint
from .corpus import klm_corpus
from .embeddings import Embedding, embedding_from_json, is_faithful
from .entail import satisfiable
from .errors import CredalError, DomainError, ParseError
from .harness import (
    tuple_cover_gadget,
    bootstrap_check,
    gadget_counts,
    gadget_feasible,
    gadget_witnesses,
    invariance_check,
    default_independence_gadget,
    rep_independence_falsify,
)
from .measures import Measure
from .optimize import maxent
from .procedures import InferenceProcedure, PriorFunction, infers
from .spaces import Space, enumerate_worlds, event_of, product_space


@dataclass(frozen=True)
class Scenario:
    spaces: tuple[tuple[str, dict], ...]  # (name, entry) in declaration order
    kb: str = "true"
    queries: tuple[str, ...] = ()
    procedure: dict = field(default_factory=lambda: {"kind": "maxent"})
    embeddings: tuple[dict, ...] = ()
    main: str | None = None
    harness: dict = field(default_factory=dict)

    # -- wire format -----------------------------------------------------
    @staticmethod
    def from_dict(obj: dict) -> "Scenario":
        if not isinstance(obj.get("spaces"), list) or not obj["spaces"]:
            raise CredalError("/spaces: at least one space is required")
        spaces = []
        for i, sp in enumerate(obj["spaces"]):
            if "name" not in sp:
                raise CredalError(f"/spaces/{i}/name: missing")
            if "vocabulary" not in sp and "factors" not in sp:
                raise CredalError(f"/spaces/{i}: needs vocabulary or factors")
            spaces.append((sp["name"], {k: v for k, v in sp.items() if k != "name"}))
        return Scenario(
            spaces=tuple(spaces),
            kb=obj.get("kb", "true"),
            queries=tuple(obj.get("queries", ())),
            procedure=dict(obj.get("procedure", {"kind": "maxent"})),
            embeddings=tuple(obj.get("embeddings", ())),
            main=obj.get("main"),
            harness=dict(obj.get("harness", {})),
        )

    def to_dict(self) -> dict:
        out = {
            "spaces": [{"name": n, **spec} for n, spec in self.spaces],
            "kb": self.kb,
            "queries": list(self.queries),
            "procedure": dict(self.procedure),
            "embeddings": [dict(e) for e in self.embeddings],
            "harness": dict(self.harness),
        }
        if self.main is not None:
            out["main"] = self.main
        return out

    # -- resolution -------------------------------------------------------
    def build_spaces(self) -> dict[str, Space]:
        built: dict[str, Space] = {}
        for i, (name, entry) in enumerate(self.spaces):
            try:
                if "factors" in entry and entry["factors"]:
                    parts = [built[f] for f in entry["factors"]]
                    built[name] = product_space(parts)
                else:
                    built[name] = enumerate_worlds(entry["vocabulary"],
                                                   entry.get("restriction"))
            except KeyError as exc:
                raise CredalError(f"/spaces/{i}: unresolved reference {exc}") from None
            except (CredalError, ValueError) as exc:
                raise CredalError(f"/spaces/{i}: {exc}") from None
        return built

    def main_space(self, built: dict[str, Space]) -> Space:
        name = self.main or self.spaces[0][0]
        if name not in built:
            raise CredalError(f"/main: unknown space {name!r}")
        return built[name]

    def build_procedure(self, built: dict[str, Space]) -> InferenceProcedure:
        kind = self.procedure.get("kind", "maxent")
        if kind == "entailment":
            return InferenceProcedure.entailment()
        if kind == "maxent":
            return InferenceProcedure.maxent()
        if kind == "i0":
            return InferenceProcedure.i0()
        if kind == "i1":
            return InferenceProcedure.i1()
        if kind == "broken":
            return InferenceProcedure.broken()
        if kind == "prior_based":
            prior = self.procedure.get("prior", "uniform")
            if prior == "uniform":
                return InferenceProcedure.prior_based(PriorFunction.uniform())
            if prior == "product_family":
                return InferenceProcedure.prior_based(PriorFunction.product_family())
            assignment = {}
            for name, rows in prior.items():
                if name not in built:
                    raise CredalError(f"/procedure/prior/{name}: unknown space")
                assignment[built[name]] = [
                    Measure.rational(built[name], [Fraction(w) for w in row]).to_float()
                    for row in rows
                ]
            return InferenceProcedure.prior_based(PriorFunction.of(assignment))
        raise CredalError(f"/procedure/kind: unknown kind {kind!r}")

    def build_embeddings(self, built: dict[str, Space]) -> list[Embedding]:
        out = []
        for i, entry in enumerate(self.embeddings):
            try:
                out.append(embedding_from_json(entry, built))
            except (KeyError, ValueError, CredalError) as exc:
                raise CredalError(f"/embeddings/{i}: {exc}") from None
        return out


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return Scenario.from_dict(json.load(fh))


# -- output ----------------------------------------------------------------


def _emit(payload: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(payload, indent=2, default=_json_default))
        return
    for line in _as_lines(payload):
        print(line)


def _json_default(x):
    if isinstance(x, Fraction):
        return str(x)
    raise TypeError(f"not serializable: {type(x)}")


def _as_lines(payload, prefix=""):
    lines = []
    if isinstance(payload, dict):
        for k, v in payload.items():
            if isinstance(v, (dict, list)):
                lines.append(f"{prefix}{k}:")
                lines.extend(_as_lines(v, prefix + "  "))
            else:
                lines.append(f"{prefix}{k}: {v}")
    elif isinstance(payload, list):
        for v in payload:
            if isinstance(v, (dict, list)):
                lines.extend(_as_lines(v, prefix + "  "))
            else:
                lines.append(f"{prefix}- {v}")
    else:
        lines.append(f"{prefix}{payload}")
    return lines


# -- commands ---------------------------------------------------------------


def cmd_infer(args) -> int:
    scenario = load_scenario(args.scenario)
    built = scenario.build_spaces()
    space = scenario.main_space(built)
    proc = scenario.build_procedure(built)
    kb = parse_constraint(scenario.kb, space)
    payload: dict = {"procedure": proc.name, "queries": []}
    if not satisfiable(kb, space).feasible:
        payload["consistency"] = "violated: kb unsatisfiable, selection empty"
        _emit(payload, args.format)
        return 1
    exit_code = 0
    for q in scenario.queries:
        theta = parse_constraint(q, space)
        v = infers(proc, kb, theta, space, eps=args.eps, seed=args.seed)
        payload["queries"].append({"query": q, "holds": v.holds, "mode": v.mode})
        if not v.holds:
            exit_code = 1
    _emit(payload, args.format)
    return exit_code


def cmd_check_embedding(args) -> int:
    scenario = load_scenario(args.scenario)
    built = scenario.build_spaces()
    payload = {"embeddings": []}
    all_faithful = True
    for entry, emb in zip(scenario.embeddings, scenario.build_embeddings(built)):
        faithful = is_faithful(emb)
        all_faithful &= faithful
        payload["embeddings"].append({
            "kind": entry.get("kind"),
            "faithful": faithful,
            "source_worlds": len(emb.source.worlds),
            "target_worlds": len(emb.target.worlds),
        })
    _emit(payload, args.format)
    return 0 if all_faithful else 1


def cmd_check_invariance(args) -> int:
    scenario = load_scenario(args.scenario)
    built = scenario.build_spaces()
    proc = scenario.build_procedure(built)
    embeddings = scenario.build_embeddings(built)
    payload = {"procedure": proc.name, "checks": []}
    violations = 0
    for k, emb in enumerate(embeddings):
        kb = parse_constraint(scenario.kb, emb.source)
        for q in scenario.queries:
            theta = parse_constraint(q, emb.source)
            rep = invariance_check(proc, emb, kb, theta, seed=args.seed)
            entry = {"embedding": k, "query": q, "invariant": rep.invariant}
            if rep.violations:
                v = rep.violations[0]
                entry["verdict_x"] = v.verdict_x
                entry["verdict_y"] = v.verdict_y
                entry["kind"] = v.kind
                violations += 1
            payload["checks"].append(entry)
    _emit(payload, args.format)
    return 1 if violations else 0


_PROCS = {
    "entailment": InferenceProcedure.entailment,
    "maxent": InferenceProcedure.maxent,
    "i0": InferenceProcedure.i0,
    "i1": InferenceProcedure.i1,
    "product-prior": lambda: InferenceProcedure.prior_based(PriorFunction.product_family()),
    "broken": InferenceProcedure.broken,
}


def cmd_falsify(args) -> int:
    proc = _PROCS[args.procedure]()
    templates = "objective" if args.procedure == "i0" else "general"
    rep = rep_independence_falsify(proc, budget=args.budget, seed=args.seed,
                                   max_worlds=args.max_worlds, templates=templates)
    payload = {
        "procedure": rep.procedure,
        "trials": rep.trials,
        "seed": rep.seed,
        "violation_found": rep.found,
    }
    if rep.found:
        v = rep.violation.violations[0]
        payload["violation"] = {
            "trial": rep.violation.trial,
            "embedding": rep.violation.embedding,
            "kind": v.kind,
            "verdict_x": v.verdict_x,
            "verdict_y": v.verdict_y,
        }
    _emit(payload, args.format)
    return 1 if rep.found else 0


def cmd_klm_check(args) -> int:
    from .procedures import klm_properties_check

    proc = _PROCS[args.procedure]()
    kbs, thetas, lle = klm_corpus()
    report = klm_properties_check(proc, kbs, thetas, lle_pairs=lle)
    payload = {
        "procedure": report.procedure,
        "kbs_checked": report.checked,
        "violations": report.by_property(),
        "all_pass": report.all_pass,
    }
    _emit(payload, args.format)
    return 0 if report.all_pass else 1


# -- bundled reproductions ---------------------------------------------------


def _reproduce_colorful() -> dict:
    coarse = enumerate_worlds(["colorful"])
    fine = enumerate_worlds(["red", "blue", "green"])
    r1 = maxent(TrueExpr(), coarse)
    r2 = maxent(TrueExpr(), fine)
    p_coarse = float(r1.measures[0].prob(event_of(coarse, "colorful")))
    p_fine = float(r2.measures[0].prob(event_of(fine, "red | blue | green")))
    from .embeddings import from_surjection

    emb = from_surjection(coarse, fine, [0 if w.bits == 0 else 1 for w in fine.worlds])
    theta = parse_constraint("P(colorful) = 1/2", coarse)
    rep = invariance_check(InferenceProcedure.maxent(), emb, TrueExpr(), theta)
    return {
        "coarse_p_colorful": p_coarse,
        "fine_p_colorful_image": p_fine,
        "invariance_violation": not rep.invariant,
    }


def _reproduce_flying_bird() -> dict:
    rep1 = enumerate_worlds(["fly", "bird"])
    rep2 = enumerate_worlds(["flying-bird", "bird"], "flying-bird => bird")
    r1 = maxent(parse_constraint("P(fly | bird) = 1/2", rep1))
    r2 = maxent(parse_constraint("P(flying-bird | bird) = 1/2", rep2))
    return {
        "rep1_p_bird": float(r1.measures[0].prob(event_of(rep1, "bird"))),
        "rep2_p_bird": float(r2.measures[0].prob(event_of(rep2, "bird"))),
    }


def _reproduce_maxent_undefined() -> dict:
    two = enumerate_worlds(["x1"])
    r_half = maxent(parse_constraint("P(x1) < 1/2", two))
    r_twothirds = maxent(parse_constraint("P(x1) < 2/3", two))
    return {
        "below_half_status": r_half.status,
        "below_two_thirds_status": r_twothirds.status,
        "below_two_thirds_p": float(r_twothirds.measures[0].prob(event_of(two, "x1"))),
    }


def _reproduce_noindep() -> dict:
    g = default_independence_gadget()
    xx = g.spaces["XX"]
    kb, query = g.constraints["kb"], g.constraints["query"]
    from .spaces import atoms_over

    cells = atoms_over([g.events["S"], g.events["S_prime"]])
    v_me = infers(InferenceProcedure.maxent(), kb, query, xx)
    v_ent = infers(InferenceProcedure.entailment(), kb, query, xx)
    return {
        "nonempty_atoms": len(cells),
        "maxent_holds": v_me.holds,
        "entailment_holds": v_ent.holds,
    }


def _reproduce_gadget_3_2() -> dict:
    g = tuple_cover_gadget(3, 2)
    counts = gadget_counts(g)
    witnesses = gadget_witnesses(g)
    u = g.extra["U"]
    return {
        "worlds": counts["worlds"],
        "u_size": counts["u_sizes"][0],
        "pairwise_size": next(iter(counts["pair_sizes"].values())),
        "infeasible_at_two_thirds": not gadget_feasible(g, Fraction(2, 3)),
        "feasible_below": gadget_feasible(g, Fraction(3, 5)),
        "witness_own_mass": str(witnesses[0].prob(u[0])),
        "witness_other_mass": str(witnesses[0].prob(u[1])),
    }


def _reproduce_bootstrap_uniform() -> dict:
    from .embeddings import from_surjection

    x = enumerate_worlds(["c"])
    y = enumerate_worlds(["u", "v"])
    equal = from_surjection(x, y, [0, 0, 1, 1])
    unequal = from_surjection(x, y, [0, 1, 1, 1])
    rep_eq = bootstrap_check([Measure.uniform(x)], [Measure.uniform(y)], equal)
    rep_ne = bootstrap_check([Measure.uniform(x)], [Measure.uniform(y)], unequal)
    return {
        "equal_fibers_correspond": rep_eq.corresponds,
        "equal_fibers_violations": len(rep_eq.violations),
        "unequal_fibers_correspond": rep_ne.corresponds,
        "unequal_fibers_violation_found": len(rep_ne.violations) > 0,
    }


REPRODUCTIONS = {
    "colorful": _reproduce_colorful,
    "flying-bird": _reproduce_flying_bird,
    "maxent-undefined": _reproduce_maxent_undefined,
    "noindep": _reproduce_noindep,
    "gadget-3-2": _reproduce_gadget_3_2,
    "bootstrap-uniform": _reproduce_bootstrap_uniform,
}


def _golden_matches(actual, golden, tol: float = 1e-6) -> bool:
    if isinstance(golden, dict):
        return (isinstance(actual, dict) and actual.keys() == golden.keys()
                and all(_golden_matches(actual[k], golden[k], tol) for k in golden))
    if isinstance(golden, list):
        return (isinstance(actual, list) and len(actual) == len(golden)
                and all(_golden_matches(a, g, tol) for a, g in zip(actual, golden)))
    if isinstance(golden, float) or isinstance(actual, float):
        return isinstance(actual, (int, float)) and math.isclose(
            float(actual), float(golden), abs_tol=tol, rel_tol=0.0)
    return actual == golden


def cmd_reproduce(args) -> int:
    name = args.name
    if name not in REPRODUCTIONS:
        print(f"unknown reproduction {name!r}; available: {', '.join(sorted(REPRODUCTIONS))}",
              file=sys.stderr)
        return 2
    result = REPRODUCTIONS[name]()
    payload = {"name": name, "results": result}
    try:
        golden_text = resources.files("credal").joinpath(f"goldens/{name}.json").read_text()
        golden = json.loads(golden_text)
        matches = _golden_matches(json.loads(json.dumps(result, default=_json_default)), golden)
        payload["golden_match"] = matches
    except FileNotFoundError:
        payload["golden_match"] = None
    _emit(payload, args.format)
    return 0 if payload["golden_match"] else 1


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=1000)
    common.add_argument("--eps", type=float, default=1e-8)
    common.add_argument("--max-worlds", type=int, default=8)

    parser = argparse.ArgumentParser(
        prog="credal",
        description="workbench for probabilistic inference procedures on finite spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", parents=[common], help="run the scenario's queries")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("check-embedding", parents=[common],
                       help="validate the scenario's embeddings")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_check_embedding)

    p = sub.add_parser("check-invariance", parents=[common],
                       help="compare verdicts across embeddings")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_check_invariance)

    p = sub.add_parser("falsify", parents=[common],
                       help="search for representation-dependence")
    p.add_argument("--procedure", choices=sorted(_PROCS), required=True)
    p.set_defaults(func=cmd_falsify)

    p = sub.add_parser("klm-check", parents=[common],
                       help="check the nonmonotonic core properties")
    p.add_argument("--procedure", choices=sorted(_PROCS), required=True)
    p.set_defaults(func=cmd_klm_check)

    p = sub.add_parser("reproduce", parents=[common],
                       help="run a bundled example against its golden file")
    p.add_argument("name")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, CredalError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:  # pragma: no cover - DomainError is a CredalError
        print(f"domain error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
