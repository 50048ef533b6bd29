"""Command-line front end.

Exit codes: 0 success / all checks pass, 1 verification failure,
2 usage or validation error, 3 impossible observation, 4 atom budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import filters, finprob, kronlab as kl, models, simulate
from .modelio import (
    format_obs,
    load_model,
    matrix_to_json,
    model_to_dict,
    read_obs,
    vector_to_json,
)
from .models import HmcModel, ModelError, SigmaPModel, SigmaSModel

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IMPOSSIBLE, EXIT_BUDGET = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _load(path: str, exact: bool = True):
    model = load_model(path)
    return model if exact else model.astype(False)


def cmd_build(args) -> int:
    model = _load(args.model, args.exact)
    what = args.what
    if what == "q":
        if isinstance(model, HmcModel):
            out = models.build_q(model)
        elif isinstance(model, SigmaPModel):
            out = model.stacked @ kl.x_selector(model.n, model.m, model.exact)
        else:
            raise UsageError("--what q needs an hmc or sigma_p model")
        _emit(matrix_to_json(out))
    elif what == "r":
        if isinstance(model, HmcModel):
            out = models.build_r(model)
        elif isinstance(model, SigmaSModel):
            out = model.stacked @ kl.x_selector(model.n, model.m, model.exact)
        else:
            raise UsageError("--what r needs an hmc or sigma_s model")
        _emit(matrix_to_json(out))
    elif what in ("sigma-p", "sigma-s"):
        if not isinstance(model, HmcModel):
            raise UsageError(f"--what {what} needs an hmc model")
        conv = models.hmc_to_sigma_p if what == "sigma-p" else models.hmc_to_sigma_s
        _emit(model_to_dict(conv(model)))
    elif what == "invariant":
        if isinstance(model, HmcModel):
            A, G = model.A, model.G
        elif isinstance(model, SigmaPModel):
            A, G = models.sigma_p_marginals(model)[0], None
        else:
            A, G = models.sigma_s_marginals(model)
        res = models.invariant_distribution(A)
        doc = {"pi": vector_to_json(res.pi), "unique": res.unique}
        if G is not None:
            doc["z_invariant"] = vector_to_json(kl.delta(G) @ res.pi)
        _emit(doc)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.steps < 0:
        raise UsageError("--steps must be nonnegative")
    if args.replicates < 1:
        raise UsageError("--replicates must be at least 1")
    model = _load(args.model)
    root = simulate.RngState(args.seed)
    samples = [simulate.sample(model, args.steps, root.child(r))
               for r in range(args.replicates)]
    multi = args.replicates > 1
    lines = ["replicate,t,x,y" if multi else "t,x,y"]
    for r, s in enumerate(samples):
        for t, x in enumerate(s.x):
            y = str(s.y[t] + 1) if t < len(s.y) else ""
            lines.append((f"{r}," if multi else "") + f"{t},{x + 1},{y}")
    sys.stdout.write("\n".join(lines) + "\n")
    if args.obs_out:
        if multi:
            for r, s in enumerate(samples):
                path = Path(args.obs_out)
                path.with_name(f"{path.stem}.{r}{path.suffix}").write_text(format_obs(s.y))
        else:
            Path(args.obs_out).write_text(format_obs(samples[0].y))
    return EXIT_OK


def cmd_filter(args) -> int:
    model = _load(args.model)
    ys = read_obs(args.obs, model.m)
    run = filters.run_filter(model, ys, mode="exact" if args.exact else "float",
                             route=args.route, on_impossible=args.on_impossible)
    for st in run:
        doc = {
            "t": st.t,
            "x_filt": vector_to_json(st.x_filt),
            "x_pred": vector_to_json(st.x_pred),
            "y_pred": vector_to_json(st.y_pred),
            "lik_inc": kl.format_scalar(st.lik_inc),
            "loglik_inc": kl.format_scalar(st.loglik_inc),
        }
        if st.reset:
            doc["reset"] = True
        _emit(doc)
    _emit({"total_loglik": kl.format_scalar(run.loglik),
           "likelihood": kl.format_scalar(run.likelihood)})
    return EXIT_OK


def cmd_verify(args) -> int:
    model = _load(args.model)
    space = finprob.enumerate_model(model, args.horizon)
    reports = []
    if args.suite in ("theorem-3-5", "all"):
        reports.append(finprob.theorem_3_5_suite(space))
    if args.suite in ("lemma-a1", "all"):
        reports.append(finprob.filtering_lemma_suite(space))
    ok = all(r.passed for r in reports)
    _emit({"pass": ok, "atoms": len(space), "reports": [r.to_dict() for r in reports]})
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finhmc", description=(
        "Exact filtering and structural verification for finite hidden Markov chains. "
        "Kernels are column-stochastic: entry (i, j) = P(next = i | current = j)."))
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct Q, R, converted models or invariant vectors")
    b.add_argument("model")
    b.add_argument("--what", required=True, choices=["q", "r", "sigma-p", "sigma-s", "invariant"])
    b.add_argument("--exact", action="store_true", help="exact rational output")
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("simulate", help="sample trajectories (CSV on stdout, 1-based indices)")
    s.add_argument("model")
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--obs-out", help="also write the observation file(s) here")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("filter", help="run the recursive filter; NDJSON on stdout")
    f.add_argument("model")
    f.add_argument("obs")
    f.add_argument("--exact", action="store_true")
    f.add_argument("--route", choices=["native", "sigma-p", "sigma-s"], default="native")
    f.add_argument("--on-impossible", choices=["error", "uniform-reset"], default="error")
    f.set_defaults(func=cmd_filter)

    v = sub.add_parser("verify", help="exact structural verification by enumeration")
    v.add_argument("model")
    v.add_argument("--horizon", type=int, required=True)
    v.add_argument("--suite", choices=["theorem-3-5", "lemma-a1", "all"], default="all")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except filters.ImpossibleObservation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    except finprob.AtomBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ModelError, kl.StochasticityError, UsageError, ValueError, IndexError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
