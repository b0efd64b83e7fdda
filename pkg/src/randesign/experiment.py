"""Config-driven Monte Carlo experiments: bound coverage, tail verification,
and batch bound evaluation.

Per-trial randomness is a pure function of (master seed, trial index), so
trials.csv is byte-identical across worker counts and re-runs.  Trials run in
a thread pool; a single writer emits rows in trial-index order.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, diagnostics, estimators, matcore, tails
from .errors import BoundInapplicableError, DomainError, SingularMatrixError
from .population import (
    PopulationModel,
    approx_second_moment,
    lambda_fourth_moment,
    model_constants,
    model_from_dict,
    ridge_second_term_expectation,
    sample,
)
from .rngstream import TAG_TRIAL, derive_stream

log = logging.getLogger("randesign")

TRIALS_COLUMNS = [
    "trial", "n", "delta", "excess_loss", "bound_total", "bound_matrix",
    "bound_noise", "bound_approx", "violation", "slack_decomp", "wall_ms",
]

SCHEMA = "randesign/1"

# Absolute guard on the violation comparison: excess loss is computed through
# an eigendecomposition, so a mathematically-zero excess shows up as ~1e-30.
# Far below any meaningful bound value; never masks a real violation.
VIOLATION_ATOL = 1e-18


@dataclass(frozen=True)
class ExperimentConfig:
    model: PopulationModel
    estimator: str  # "ols" | "ridge"
    n_grid: tuple
    delta_grid: tuple
    trials: int
    master_seed: int
    out_dir: Path
    lam: float = 0.0
    threads: int = 1

    def __post_init__(self):
        if self.estimator not in ("ols", "ridge"):
            raise DomainError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "ridge" and self.lam <= 0:
            raise DomainError("ridge experiments need a positive lambda")
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "delta_grid", tuple(float(x) for x in self.delta_grid))
        object.__setattr__(self, "out_dir", Path(self.out_dir))


def config_from_dict(doc: dict, out_dir=None, seed=None, trials=None,
                     threads=None) -> ExperimentConfig:
    model_doc = doc["model"]
    if isinstance(model_doc, str):
        with open(model_doc) as fh:
            model_doc = json.load(fh)
    return ExperimentConfig(
        model=model_from_dict(model_doc),
        estimator=doc.get("estimator", "ols"),
        lam=float(doc.get("lambda", 0.0)),
        n_grid=doc["n_grid"],
        delta_grid=doc["delta_grid"],
        trials=int(trials if trials is not None else doc.get("trials", 100)),
        master_seed=int(seed if seed is not None else doc.get("master_seed", 0)),
        out_dir=out_dir if out_dir is not None else doc.get("out", "."),
        threads=int(threads if threads is not None else doc.get("threads", 1)),
    )


@dataclass(frozen=True)
class _BoundEvaluator:
    """Everything (n, delta)-independent about the bound, precomputed once."""

    kind: str  # correct | misspecified | ridge
    d: int
    sigma_noise: float
    rho1: float | None = None
    rho2: float | None = None
    b_bias: float = 0.0
    e_term: float = 0.0
    # ridge-only
    lam: float = 0.0
    spectrum: np.ndarray | None = None
    beta_eig: np.ndarray | None = None
    rho_lam: float = 0.0
    b_bias_lam: float = 0.0
    fourth_moment: float = 0.0
    second_term_expectation: float | None = None

    def evaluate(self, n: int, delta: float) -> dict:
        """Returns {total, matrix, noise, approx}; raises when inapplicable."""
        if self.kind == "ridge":
            report = bounds.theorem_ridge(bounds.RidgeBoundInputs(
                spectrum=self.spectrum, beta_eig=self.beta_eig, lam=self.lam,
                n=n, delta=delta, sigma_noise=self.sigma_noise,
                rho_lam=self.rho_lam, b_bias_lam=self.b_bias_lam,
                fourth_moment=self.fourth_moment,
                second_term_expectation=self.second_term_expectation,
            ))
            c = report.components
            return {
                "total": report.excess_sq,
                "matrix": c["matrix_error"],
                "noise": c["third"],
                "approx": c["first"] + c["second"],
            }
        inputs = bounds.OlsBoundInputs(
            d=self.d, n=n, delta=delta, sigma_noise=self.sigma_noise,
            rho1=self.rho1, rho2=self.rho2, b_bias=self.b_bias,
            e_term=self.e_term,
        )
        if self.kind == "correct":
            report = bounds.theorem_correct_model(inputs)
            approx = 0.0
        else:
            report = bounds.theorem_misspecified(inputs)
            approx = report.components["approx"]
        return {
            "total": report.excess_sq,
            "matrix": report.components["matrix_error"],
            "noise": report.components["noise"],
            "approx": approx,
        }


def _build_evaluator(config: ExperimentConfig) -> _BoundEvaluator:
    model = config.model
    consts = model_constants(model)
    if config.estimator == "ridge":
        spec = matcore.sym_eig(model.second_moment())
        return _BoundEvaluator(
            kind="ridge", d=model.dim, sigma_noise=consts.sigma_noise,
            lam=config.lam,
            spectrum=spec.eigenvalues,
            beta_eig=spec.eigenvectors.T @ model.beta,
            rho_lam=consts.rho_lambda(config.lam),
            b_bias_lam=consts.b_bias_lambda(config.lam),
            fourth_moment=lambda_fourth_moment(model, config.lam),
            second_term_expectation=(
                ridge_second_term_expectation(model, config.lam)
                if model.design.kind == "discrete-atoms" else None
            ),
        )
    kind = "correct" if model.bias.is_zero else "misspecified"
    rho1 = rho2 = None
    if model.design.kind == "discrete-atoms":
        rho2 = consts.rho_2cov
    else:
        rho1 = consts.rho_1cov
    e_term = approx_second_moment(model) if kind == "misspecified" else 0.0
    return _BoundEvaluator(
        kind=kind, d=model.dim, sigma_noise=consts.sigma_noise,
        rho1=rho1, rho2=rho2, b_bias=consts.b_bias, e_term=e_term,
    )


def _applicable_pairs(config: ExperimentConfig, evaluator: _BoundEvaluator):
    """Partition the (n, delta) grid by bound applicability."""
    applicable, skipped = [], []
    for n in config.n_grid:
        for delta in config.delta_grid:
            try:
                evaluator.evaluate(n, delta)
            except BoundInapplicableError as exc:
                skipped.append({"n": n, "delta": delta, "reason": str(exc)})
                log.warning("skipping (n=%d, delta=%g): %s", n, delta, exc)
            else:
                applicable.append((n, delta))
    if not applicable:
        raise DomainError(
            "no applicable (n, delta) pair in the grid; reasons: "
            + "; ".join(f"n={s['n']}, delta={s['delta']}: {s['reason']}"
                        for s in skipped)
        )
    return applicable, skipped


def _run_trial(config: ExperimentConfig, evaluator: _BoundEvaluator,
               n_index: int, n: int, deltas, trial: int) -> list[dict]:
    """One sample, one estimator fit, one row per delta."""
    start = time.perf_counter()
    stream = derive_stream(config.master_seed, (n_index << 32) | trial, TAG_TRIAL)
    smp = sample(config.model, n, stream)
    if config.estimator == "ridge":
        fit = estimators.ridge_fit(smp, config.lam)
        check = diagnostics.check_ridge_decomposition(smp, config.model, config.lam)
    else:
        fit = estimators.ols_fit(smp)
        check = diagnostics.check_ols_decomposition(smp, config.model)
    excess = estimators.excess_loss(fit.coefficients, config.model)
    wall_ms = (time.perf_counter() - start) * 1e3
    rows = []
    for delta in deltas:
        comp = evaluator.evaluate(n, delta)
        rows.append({
            "trial": trial,
            "n": n,
            "delta": delta,
            "excess_loss": excess,
            "bound_total": comp["total"],
            "bound_matrix": comp["matrix"],
            "bound_noise": comp["noise"],
            "bound_approx": comp["approx"],
            "violation": int(excess > comp["total"] + VIOLATION_ATOL),
            "slack_decomp": check.slack,
            "wall_ms": round(wall_ms, 3),
        })
    return rows


def run_experiment(config: ExperimentConfig) -> dict:
    """Run the trial grid; write trials.csv and summary.json; return summary."""
    evaluator = _build_evaluator(config)
    applicable, skipped = _applicable_pairs(config, evaluator)
    by_n: dict[int, list[float]] = {}
    for n, delta in applicable:
        by_n.setdefault(n, []).append(delta)

    config.out_dir.mkdir(parents=True, exist_ok=True)
    all_rows: list[dict] = []
    jobs = []
    with ThreadPoolExecutor(max_workers=max(config.threads, 1)) as pool:
        for n_index, n in enumerate(config.n_grid):
            if n not in by_n:
                continue
            for trial in range(config.trials):
                jobs.append(pool.submit(
                    _run_trial, config, evaluator, n_index, n, by_n[n], trial
                ))
        for job in jobs:  # submission order == (n, trial) order
            all_rows.extend(job.result())

    trials_path = config.out_dir / "trials.csv"
    with open(trials_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRIALS_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(all_rows)

    sigma_sq = config.model.noise.sigma**2
    cells = {}
    for n, delta in applicable:
        rows = [r for r in all_rows if r["n"] == n and r["delta"] == delta]
        losses = np.array([r["excess_loss"] for r in rows])
        violations = np.array([r["violation"] for r in rows])
        cells[f"n={n},delta={delta}"] = {
            "n": n,
            "delta": delta,
            "trials": len(rows),
            "coverage": float(1.0 - violations.mean()),
            "mean_excess": float(losses.mean()),
            "quantiles": {
                "q50": float(np.quantile(losses, 0.5)),
                "q90": float(np.quantile(losses, 0.9)),
                "q99": float(np.quantile(losses, 0.99)),
            },
            "fixed_design_reference": config.model.dim * sigma_sq / n,
        }
    summary = {
        "schema": SCHEMA,
        "estimator": config.estimator,
        "lambda": config.lam,
        "master_seed": config.master_seed,
        "trials": config.trials,
        "cells": cells,
        "skipped": skipped,
    }
    with open(config.out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


# ---------------------------------------------------------------------------
# Tail verification.


def verify_tails(scenario: dict, trials=None, seed=None) -> dict:
    """Run one tail-lemma reference sampler over a delta grid.

    Scenario schema: {"lemma": <sampler name>, "params": {...},
    "deltas": [...], "trials": t, "seed": s}.  A report row passes when the
    empirical violation rate is at most delta + 3 binomial standard errors.
    """
    name = scenario["lemma"]
    if name not in tails.REFERENCE_SAMPLERS:
        raise DomainError(
            f"unknown lemma {name!r}; known: {sorted(tails.REFERENCE_SAMPLERS)}"
        )
    sampler = tails.REFERENCE_SAMPLERS[name]
    params = scenario.get("params", {})
    t = int(trials if trials is not None else scenario.get("trials", 10_000))
    s = int(seed if seed is not None else scenario.get("seed", 0))
    rows = []
    ok = True
    for delta in scenario["deltas"]:
        delta = float(delta)
        rate = sampler(params, delta, t, s)
        se = float(np.sqrt(delta * (1.0 - delta) / t))
        passed = rate <= delta + 3.0 * se
        ok = ok and passed
        rows.append({
            "delta": delta, "rate": rate, "se": se,
            "threshold": delta + 3.0 * se, "pass": passed,
        })
    return {"schema": SCHEMA, "lemma": name, "params": params, "trials": t,
            "seed": s, "rows": rows, "ok": ok}


# ---------------------------------------------------------------------------
# Batch bound evaluation.


def _evaluate_bound_scenario(doc: dict) -> dict:
    kind = doc["kind"]
    if kind in ("correct", "misspecified") and "K" in doc:
        # explicit matrix-error factor supplied: evaluate the contributions
        # directly instead of deriving K from a leverage constant
        k = float(doc["K"])
        d, n, delta = int(doc["d"]), int(doc["n"]), float(doc["delta"])
        noise = bounds.noise_contribution(k, float(doc.get("sigma_noise", 0.0)),
                                          d, delta, n)
        if kind == "correct":
            return bounds.BoundReport(
                components={"matrix_error": k, "noise": noise},
                excess_sq=noise, excess_norm=float(np.sqrt(noise)),
                delta_total=2.0 * delta,
            ).to_dict()
        approx = bounds.approx_contribution(
            k, float(doc.get("e_term", 0.0)), float(doc.get("b_bias", 0.0)),
            d, delta, n,
        )
        return bounds.BoundReport(
            components={"matrix_error": k, "noise": noise, "approx": approx},
            excess_sq=2.0 * (approx + noise),
            excess_norm=float(np.sqrt(approx) + np.sqrt(noise)),
            delta_total=3.0 * delta,
        ).to_dict()
    if kind in ("correct", "misspecified"):
        inputs = bounds.OlsBoundInputs(
            d=int(doc["d"]), n=int(doc["n"]), delta=float(doc["delta"]),
            sigma_noise=float(doc.get("sigma_noise", 0.0)),
            rho1=doc.get("rho1"), rho2=doc.get("rho2"),
            b_bias=float(doc.get("b_bias", 0.0)),
            e_term=float(doc.get("e_term", 0.0)),
        )
        fn = bounds.theorem_correct_model if kind == "correct" \
            else bounds.theorem_misspecified
        return fn(inputs).to_dict()
    if kind == "ridge":
        inputs = bounds.RidgeBoundInputs(
            spectrum=np.asarray(doc["spectrum"], float),
            beta_eig=np.asarray(doc["beta_eig"], float),
            lam=float(doc["lambda"]), n=int(doc["n"]),
            delta=float(doc["delta"]),
            sigma_noise=float(doc.get("sigma_noise", 0.0)),
            rho_lam=float(doc["rho_lambda"]),
            b_bias_lam=float(doc.get("b_bias_lambda", 0.0)),
            fourth_moment=float(doc["fourth_moment"]),
            second_term_expectation=doc.get("second_term_expectation"),
        )
        return bounds.theorem_ridge(inputs).to_dict()
    raise DomainError(f"unknown bound kind {kind!r}")


def bounds_stream(scenarios: list[dict]) -> list[dict]:
    """Evaluate each scenario; per-scenario errors become records, not aborts."""
    out = []
    for i, doc in enumerate(scenarios):
        record = {"index": i}
        try:
            record.update(_evaluate_bound_scenario(doc))
            record["inapplicable"] = False
        except BoundInapplicableError as exc:
            record.update({"inapplicable": True, "reason": str(exc)})
        except (DomainError, KeyError, ValueError, SingularMatrixError) as exc:
            record.update({"error": f"{type(exc).__name__}: {exc}"})
        out.append(record)
    return out
