"""Analysis orchestration: turn a validated config into a structured report.

The report is plain data (dicts and lists) so it serializes identically through
the HTTP service and straight to files. Model-evaluation costs are tracked per
stage; reference (oracle) computations run on a forked ledger and never count
against the sampling budget.
"""

from __future__ import annotations

import math
import time
from typing import Dict, List, Optional, Sequence, Tuple

from . import bounds as bounds_mod
from . import estimators as est
from . import oracle as oracle_mod
from .config import AnalysisConfig, build_model, build_space, model_dimension
from .distributions import poincare_constant
from .errors import ConfigError, DegenerateVarianceError
from .functions import gradient_sample
from .sampling import LowDiscrepancy, Pseudo, generate, morris_trajectories, pick_freeze

SCHEMA_VERSION = "1"

# CSV column order is part of the external interface; see README.
CSV_COLUMNS = [
    "input",
    "S",
    "S_se",
    "S_tot",
    "S_tot_se",
    "LB1",
    "LB2",
    "m_star",
    "LB_star",
    "UB1",
    "UB2",
    "UB_poincare",
    "nu",
    "nu_se",
    "sigma_small",
    "sigma_small_se",
    "tau",
    "tau_se",
    "mu_star",
    "mu_star_se",
    "model_evals",
]

CONVERGENCE_COLUMNS = ["n", "input", "UB1", "S_tot_ref"]


def _generator(cfg: AnalysisConfig):
    if cfg.sampler.kind == "pseudo":
        return Pseudo(cfg.sampler.seed)
    return LowDiscrepancy(cfg.sampler.skip)


def _clean(value) -> Optional[float]:
    """NaN-free float for serialization (None marks 'not applicable')."""
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) else value


def run_analysis(cfg: AnalysisConfig) -> dict:
    """Execute every requested analysis and assemble the report document.

    Raises :class:`ConfigError` for configuration problems and
    :class:`DegenerateVarianceError` when a variance-normalized analysis meets
    a constant model.
    """
    start = time.perf_counter()
    f = build_model(cfg.model)
    d = model_dimension(cfg.model)
    space = build_space(cfg, d)
    generator = _generator(cfg)
    n = cfg.sampler.n
    analyses = list(cfg.analyses)

    rows: List[Dict[str, Optional[float]]] = [{"input": f"x{i + 1}"} for i in range(d)]
    stage_evals: Dict[str, int] = {}
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "model": f.name,
        "dimension": d,
        "analyses": analyses,
        "sampler": {
            "kind": cfg.sampler.kind,
            "seed": cfg.sampler.seed if cfg.sampler.kind == "pseudo" else None,
            "skip": cfg.sampler.skip if cfg.sampler.kind == "lowdiscrepancy" else None,
            "n": n,
        },
        "fd_delta": cfg.fd_delta,
        "crossed_delta": cfg.crossed_delta,
        "space": [m.kind for m in space.marginals],
    }

    def mark(stage: str, before: Tuple[int, int]) -> None:
        after = f.ledger.snapshot()
        stage_evals[stage] = after[0] - before[0]

    needs_gradients = any(a in analyses for a in ("dgsm", "bounds"))
    grads = None
    dgsm = None
    if needs_gradients:
        before = f.ledger.snapshot()
        design = generate(space, n, generator)
        grads = gradient_sample(
            f,
            design.points,
            grad_mode="analytic" if cfg.model.gradient == "analytic" else "forward_fd",
            delta=cfg.fd_delta,
            bounds=space.supports(),
        )
        dgsm = est.dgsm_estimates(grads, space)
        mark("dgsm", before)
        for i in range(d):
            rows[i]["nu"] = _clean(dgsm.nu[i])
            rows[i]["nu_se"] = _clean(dgsm.nu_se[i])
            rows[i]["w"] = _clean(dgsm.w[i])
            rows[i]["w_se"] = _clean(dgsm.w_se[i])
            rows[i]["mu_star"] = _clean(dgsm.mu_star[i])
            rows[i]["mu_star_se"] = _clean(dgsm.mu_star_se[i])
            if dgsm.sigma_small is not None:
                rows[i]["sigma_small"] = _clean(dgsm.sigma_small[i])
                rows[i]["sigma_small_se"] = _clean(dgsm.sigma_small_se[i])
            if dgsm.tau is not None:
                rows[i]["tau"] = _clean(dgsm.tau[i])
                rows[i]["tau_se"] = _clean(dgsm.tau_se[i])

    crossed = None
    if "crossed" in analyses:
        before = f.ledger.snapshot()
        points = grads.points if grads is not None else generate(space, n, generator).points
        crossed = est.estimate_nu_crossed(
            f, points, space.supports(), delta=cfg.crossed_delta, pairs=cfg.pairs
        )
        mark("crossed", before)

    if "bounds" in analyses:
        before = f.ledger.snapshot()
        rep = bounds_mod.bounds_report(
            f,
            space,
            grads,
            dgsm,
            envelope=cfg.envelope,
            groups=cfg.groups,
            crossed_nu=crossed,
        )
        mark("bounds_extra", before)
        if rep.degenerate:
            raise DegenerateVarianceError(
                "model output variance is zero; bounds are undefined (degenerate report)"
            )
        report["variance"] = rep.variance
        report["mean"] = rep.mean
        for i in range(d):
            rows[i]["LB1"] = _clean(rep.lb1[i])
            rows[i]["LB2"] = _clean(rep.lb2[i])
            rows[i]["m_star"] = _clean(rep.m_star[i])
            rows[i]["LB_star"] = _clean(rep.lb_star[i])
            rows[i]["UB1"] = _clean(rep.ub1_values[i])
            rows[i]["UB2"] = _clean(rep.ub2_values[i])
            rows[i]["UB_poincare"] = _clean(rep.ub_poincare_values[i])
            rows[i]["normal_LB"] = _clean(rep.normal_lb[i])
            rows[i]["derivative_sup_heuristic"] = _clean(rep.derivative_sup[i])
            if rep.theorem1_lower is not None:
                rows[i]["envelope_lower"] = _clean(rep.theorem1_lower[i])
                rows[i]["envelope_upper"] = _clean(rep.theorem1_upper[i])
        if rep.groups:
            report["groups"] = [
                {
                    "inputs": [i + 1 for i in g.group],
                    "tau": _clean(g.tau),
                    "tau_se": _clean(g.tau_se),
                    "UB": _clean(g.ub),
                    "exact_if_linear": _clean(g.exact_if_linear),
                    "kind": g.kind,
                }
                for g in rep.groups
            ]

    sobol = None
    if "sobol" in analyses:
        before = f.ledger.snapshot()
        pf = pick_freeze(space, n, generator)
        evaluator = est.PickFreezeEvaluator(f, pf)
        sobol = est.estimate_sobol(f, pf, first_order=cfg.sobol_first_order, evaluator=evaluator)
        superset = None
        if "crossed" in analyses:
            pairs = cfg.pairs or [(i, j) for i in range(d) for j in range(i + 1, d)]
            superset = est.estimate_superset(f, pf, pairs, evaluator=evaluator)
        mark("sobol", before)
        report.setdefault("variance", sobol.variance)
        report.setdefault("mean", sobol.mean)
        report["sobol_variance"] = sobol.variance
        for i in range(d):
            if sobol.s is not None:
                rows[i]["S"] = _clean(sobol.s[i])
                rows[i]["S_se"] = _clean(sobol.s_se[i])
            rows[i]["S_tot"] = _clean(sobol.s_tot[i])
            rows[i]["S_tot_se"] = _clean(sobol.s_tot_se[i])
        if superset is not None:
            report["superset"] = [
                {
                    "pair": [i + 1, j + 1],
                    "V_super": _clean(value),
                    "V_super_se": _clean(se),
                    "S_super": _clean(value / sobol.variance),
                }
                for (i, j), (value, se) in sorted(superset.items())
            ]

    if crossed is not None:
        pair_entries = []
        for (i, j), (value, se) in sorted(crossed.items()):
            entry = {"pair": [i + 1, j + 1], "nu_crossed": _clean(value), "nu_crossed_se": _clean(se)}
            variance = report.get("variance")
            if variance:
                entry["superset_UB"] = _clean(
                    bounds_mod.superset_ub(
                        value,
                        poincare_constant(space.marginals[i]),
                        poincare_constant(space.marginals[j]),
                        variance,
                    )
                )
            pair_entries.append(entry)
        report["crossed"] = pair_entries

    if "morris" in analyses:
        before = f.ledger.snapshot()
        design = morris_trajectories(
            space,
            cfg.morris.r,
            cfg.morris.p,
            cfg.morris.delta_levels,
            seed=cfg.sampler.seed,
        )
        morris = est.morris_measures(f, space, design)
        mark("morris", before)
        report["morris"] = {
            "r": morris.r,
            "p": cfg.morris.p,
            "delta": design.delta,
            "mu": [_clean(v) for v in morris.mu],
            "mu_star": [_clean(v) for v in morris.mu_star],
            "sigma": [_clean(v) for v in morris.sigma],
        }

    if "oracle" in analyses:
        oracle_model = f.with_fresh_ledger()
        anova = oracle_mod.anova_totals(oracle_model, space, order=cfg.oracle_order)
        oracle_doc: dict = {
            "order": cfg.oracle_order,
            "g0": anova.g0,
            "variance": anova.variance,
            "S": [_clean(v) for v in anova.s_first],
            "S_tot": [_clean(v) for v in anova.s_tot],
        }
        if oracle_model.has_analytic_gradient:
            exact = oracle_mod.dgsm_exact(oracle_model, space, order=cfg.oracle_order)
            oracle_doc["nu"] = [_clean(v) for v in exact.nu]
            if exact.sigma_small is not None:
                oracle_doc["sigma_small"] = [_clean(v) for v in exact.sigma_small]
            if exact.tau is not None:
                oracle_doc["tau"] = [_clean(v) for v in exact.tau]
            oracle_doc["mu_star"] = [_clean(v) for v in exact.mu_star]
        oracle_doc["model_evals"] = oracle_model.ledger.snapshot()[0]
        report["oracle"] = oracle_doc
        for i in range(d):
            rows[i]["oracle_S"] = _clean(anova.s_first[i])
            rows[i]["oracle_S_tot"] = _clean(anova.s_tot[i])

    total_evals, gradient_evals = f.ledger.snapshot()
    stage_evals["total"] = total_evals
    for row in rows:
        row["model_evals"] = total_evals
    report["rows"] = rows
    report["ledger"] = {"stages": stage_evals, "model_evals": total_evals, "gradient_evals": gradient_evals}
    report["wall_time_s"] = time.perf_counter() - start
    return report


def run_convergence(cfg: AnalysisConfig, n_list: Sequence[int]) -> dict:
    """Upper-bound estimates at increasing sample sizes against one fixed
    total-index reference.

    The reference totals use the configured ``sampler.n`` with a pick-freeze
    design; each entry of ``n_list`` then estimates ``nu`` (and the output
    variance) from the first ``n`` points of the derivative stream.
    """
    if not n_list:
        raise ConfigError("n", "convergence needs at least one sample size")
    n_list = [int(v) for v in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigError("n", "sample sizes must be strictly ascending")
    if n_list[0] < 2:
        raise ConfigError("n", "sample sizes must be at least 2")

    start = time.perf_counter()
    f = build_model(cfg.model)
    d = model_dimension(cfg.model)
    space = build_space(cfg, d)
    generator = _generator(cfg)

    reference = est.estimate_sobol(
        f, pick_freeze(space, cfg.sampler.n, generator), first_order=False
    )

    rows = []
    for n in n_list:
        design = generate(space, n, generator)
        grads = gradient_sample(
            f,
            design.points,
            grad_mode="analytic" if cfg.model.gradient == "analytic" else "forward_fd",
            delta=cfg.fd_delta,
            bounds=space.supports(),
        )
        values = grads.values if grads.values is not None else f.evaluate_batch(grads.points)
        variance = float(values.var(ddof=1))
        if not variance > 0:
            raise DegenerateVarianceError(
                f"model output variance is zero at n={n}; bounds are undefined"
            )
        nu, _ = est.estimate_nu(grads)
        for i in range(d):
            # the general spectral-gap bound reduces to nu/(pi^2 V) when the
            # marginal is unit-uniform
            if space.is_unit_uniform(i):
                ub = bounds_mod.ub1(float(nu[i]), variance)
            else:
                ub = bounds_mod.ub_poincare(
                    float(nu[i]), poincare_constant(space.marginals[i]), variance
                )
            rows.append(
                {
                    "n": n,
                    "input": f"x{i + 1}",
                    "UB1": _clean(ub),
                    "S_tot_ref": _clean(reference.s_tot[i]),
                }
            )

    return {
        "schema_version": SCHEMA_VERSION,
        "model": f.name,
        "dimension": d,
        "reference_n": cfg.sampler.n,
        "n_list": n_list,
        "rows": rows,
        "ledger": {"model_evals": f.ledger.snapshot()[0]},
        "wall_time_s": time.perf_counter() - start,
    }
