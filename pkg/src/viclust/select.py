"""Variable selection: skewness screen with log transforms, then correlation pruning.

Skewness is the moment coefficient g1 = m3 / m2^(3/2) with population
moments m_k = mean((x - mean(x))^k); no small-sample correction. The
screen keeps a variable untouched when |g1| < threshold, otherwise
applies ln(x + 1) and re-tests; a variable failing both is removed.
Pruning then removes one variable from every pair whose |r| meets the
correlation threshold, preferring to keep the more distinctive variable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, DegenerateColumnError
from .ingest import TRANSFORM_LOG1P, Dataset, OmissionLog, omit_unpopulated_regions
from .spatial import AdjacencyGraph, ImputationLog, impute_neighbor_mean

DECISION_KEPT = "kept"
DECISION_KEPT_LOGGED = "kept_logged"
DECISION_REMOVED_SKEW = "removed_skew"
DECISION_REMOVED_CORR = "removed_corr"
DECISION_REMOVED_MANUAL = "removed_manual"


@dataclass(frozen=True)
class VariableDecision:
    short_form: str
    raw_skewness: float | None
    logged_skewness: float | None
    decision: str


@dataclass(frozen=True)
class SelectionReport:
    decisions: tuple[VariableDecision, ...]
    correlation_pairs: tuple[tuple[str, str, float], ...]
    final_variables: tuple[str, ...]

    def decision_of(self, short_form: str) -> str:
        for d in self.decisions:
            if d.short_form == short_form:
                return d.decision
        raise DataError(f"no decision recorded for {short_form!r}")

    def to_json_dict(self) -> dict:
        return {
            "decisions": [
                {
                    "short_form": d.short_form,
                    "raw_skewness": d.raw_skewness,
                    "logged_skewness": d.logged_skewness,
                    "decision": d.decision,
                }
                for d in self.decisions
            ],
            "correlation_pairs": [
                {"a": a, "b": b, "r": r} for a, b, r in self.correlation_pairs
            ],
            "final_variables": list(self.final_variables),
        }


@dataclass(frozen=True)
class SelectionConfig:
    erp_variable: str
    skew_threshold: float = 2.0
    corr_threshold: float = 0.90
    manual_removals: tuple[str, ...] = ()


@dataclass
class SelectionOutcome:
    """run_selection result: the pruned dataset plus every log it produced."""

    dataset: Dataset
    report: SelectionReport
    omission_log: OmissionLog
    imputation_log: ImputationLog


def compute_skewness(x: np.ndarray) -> float:
    """Moment-coefficient skewness g1 = m3 / m2^(3/2)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DataError("skewness expects a 1-D vector")
    if x.size < 3:
        raise DegenerateColumnError(f"skewness needs >= 3 values, got {x.size}")
    if np.ptp(x) == 0.0:
        raise DegenerateColumnError("skewness undefined for a constant vector")
    dev = x - x.mean()
    m2 = float(np.mean(dev * dev))
    m3 = float(np.mean(dev * dev * dev))
    return m3 / m2**1.5


def log_transform(x: np.ndarray) -> np.ndarray:
    """Elementwise ln(x + 1); rejects negative inputs."""
    x = np.asarray(x, dtype=float)
    if (x < 0).any():
        bad = float(x[x < 0][0])
        raise DataError(f"log transform requires non-negative values, got {bad}")
    return np.log1p(x)


def screen_skewness(
    d: Dataset, threshold: float = 2.0
) -> tuple[Dataset, list[VariableDecision]]:
    """Apply the skewness screen; returns the surviving dataset and decisions.

    Surviving columns keep their original order; a kept_logged column holds
    the transformed values and its metadata records the transform.
    """
    if d.missing_mask().any():
        raise DataError("skewness screen requires a dataset with no missing cells")
    decisions: list[VariableDecision] = []
    kept_cols: list[int] = []
    new_values = d.values.copy()
    new_vars = list(d.variables)
    for j, var in enumerate(d.variables):
        col = d.values[:, j]
        raw = compute_skewness(col)
        if abs(raw) < threshold:
            decisions.append(VariableDecision(var.short_form, raw, None, DECISION_KEPT))
            kept_cols.append(j)
            continue
        logged_col = log_transform(col)
        logged = compute_skewness(logged_col)
        if abs(logged) < threshold:
            decisions.append(
                VariableDecision(var.short_form, raw, logged, DECISION_KEPT_LOGGED)
            )
            new_values[:, j] = logged_col
            new_vars[j] = replace(var, transform_applied=TRANSFORM_LOG1P)
            kept_cols.append(j)
        else:
            decisions.append(
                VariableDecision(var.short_form, raw, logged, DECISION_REMOVED_SKEW)
            )
    survivors = Dataset(
        regions=list(d.regions),
        variables=[new_vars[j] for j in kept_cols],
        values=new_values[:, kept_cols].copy(),
    )
    return survivors, decisions


def pearson_correlation_matrix(d: Dataset) -> np.ndarray:
    """Symmetric Pearson matrix with an exact unit diagonal."""
    if d.missing_mask().any():
        raise DataError("correlation requires a dataset with no missing cells")
    x = d.values
    for j, var in enumerate(d.variables):
        if np.ptp(x[:, j]) == 0.0:
            raise DegenerateColumnError(
                f"variable {var.short_form!r} has zero variance"
            )
    dev = x - x.mean(axis=0)
    sd = np.sqrt((dev * dev).sum(axis=0))
    z = dev / sd
    r = z.T @ z
    r = np.clip((r + r.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return r


def prune_correlated(
    d: Dataset, threshold: float = 0.90
) -> tuple[Dataset, list[tuple[str, str, float]]]:
    """Iteratively drop one variable from every |r| >= threshold pair.

    Each round picks the offending pair with the largest |r| (ties broken
    lexicographically on the name pair) and removes its member with the
    larger mean absolute correlation to all remaining variables (ties
    remove the lexicographically later name). Pairwise correlations do not
    depend on the other columns, so the matrix is computed once and rounds
    operate on the shrinking alive set.
    """
    if d.p < 2:
        return d.copy(), []
    r = pearson_correlation_matrix(d)
    names = d.short_forms
    alive = list(range(d.p))
    removals: list[tuple[str, str, float]] = []
    while True:
        offenders = []
        for ai, i in enumerate(alive):
            for j in alive[ai + 1 :]:
                if abs(r[i, j]) >= threshold:
                    pair_names = tuple(sorted((names[i], names[j])))
                    offenders.append((abs(r[i, j]), pair_names, i, j))
        if not offenders:
            break
        offenders.sort(key=lambda t: (-t[0], t[1]))
        _, _, i, j = offenders[0]

        def mean_abs(k: int) -> float:
            others = [m for m in alive if m != k]
            return float(np.mean([abs(r[k, m]) for m in others]))

        mi, mj = mean_abs(i), mean_abs(j)
        if mi > mj:
            drop, keep = i, j
        elif mj > mi:
            drop, keep = j, i
        else:
            drop, keep = (i, j) if names[i] > names[j] else (j, i)
        removals.append((names[drop], names[keep], float(r[i, j])))
        alive.remove(drop)
    survivors = Dataset(
        regions=list(d.regions),
        variables=[d.variables[j] for j in alive],
        values=d.values[:, alive].copy(),
    )
    return survivors, removals


def run_selection(
    d: Dataset, g: AdjacencyGraph, config: SelectionConfig
) -> SelectionOutcome:
    """Full selection pass: omit, impute, skewness screen, correlation prune.

    Manual removals from the config are applied after region omission and
    before imputation, so doomed columns are never imputed. The report
    assigns exactly one decision to every variable of the input dataset.
    """
    unknown = [v for v in config.manual_removals if v not in set(d.short_forms)]
    if unknown:
        raise DataError(f"manual removal of unknown variable(s): {', '.join(unknown)}")

    populated, omission_log = omit_unpopulated_regions(d, config.erp_variable)

    manual = set(config.manual_removals)
    keep_cols = [j for j, v in enumerate(populated.variables) if v.short_form not in manual]
    trimmed = Dataset(
        regions=list(populated.regions),
        variables=[populated.variables[j] for j in keep_cols],
        values=populated.values[:, keep_cols].copy(),
    )

    imputed, imputation_log = impute_neighbor_mean(trimmed, g)
    screened, skew_decisions = screen_skewness(imputed, config.skew_threshold)

    corr = pearson_correlation_matrix(screened)
    corr_names = screened.short_forms
    offending_pairs = tuple(
        (corr_names[i], corr_names[j], float(corr[i, j]))
        for i in range(len(corr_names))
        for j in range(i + 1, len(corr_names))
        if abs(corr[i, j]) >= config.corr_threshold
    )

    pruned, corr_removals = prune_correlated(screened, config.corr_threshold)
    removed_corr = {name for name, _, _ in corr_removals}

    skew_by_name = {dec.short_form: dec for dec in skew_decisions}
    decisions: list[VariableDecision] = []
    for var in d.variables:
        name = var.short_form
        if name in manual:
            decisions.append(VariableDecision(name, None, None, DECISION_REMOVED_MANUAL))
        elif name in removed_corr:
            base = skew_by_name[name]
            decisions.append(replace(base, decision=DECISION_REMOVED_CORR))
        else:
            decisions.append(skew_by_name[name])

    report = SelectionReport(
        decisions=tuple(decisions),
        correlation_pairs=offending_pairs,
        final_variables=tuple(pruned.short_forms),
    )
    return SelectionOutcome(
        dataset=pruned,
        report=report,
        omission_log=omission_log,
        imputation_log=imputation_log,
    )
