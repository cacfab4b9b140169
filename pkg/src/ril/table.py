"""Reproduce the invariance directory: object kinds by transformation classes.

Each cell of the directory records whether a transformation class leaves an
object kind's fingerprint unchanged.  The expected marks ship with the
package (data/expected_marks.json):

* inv_special: invariant, and the class exactly characterizes the kind's
  ambiguity (the witnesses sections of the source results).
* inv: invariant (the class sits inside the kind's preserving set).
* not: not invariant; a counterexample exists.
* mixed: depends on the MDP.  Reproduced on two fixed proof MDPs: one where
  every curvature-bending rescaling breaks the object and one where every
  rescaling preserves it.
* blank: no claim; the cell is skipped.

reproduce_directory_table runs the matching experiment per cell (invariance
checking for inv marks, directed counterexample search for not marks) and
compares outcomes to the expected marks.  Cell experiments derive their
random streams from (seed, kind, class) alone, so verdicts are identical
for any thread count; wall-clock timings live in a separate report section.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

from .errors import ContractError
from .invariance import (
    STATUS_COUNTEREXAMPLE,
    STATUS_INVARIANT,
    CheckConfig,
    check_invariance,
    search_counterexample,
)
from .micro import chain_mdp, two_action_loop_mdp
from .objects import KIND_TAGS
from .transforms import CLASS_TAGS

MARK_SYMBOLS = {
    "inv_special": "=*",
    "inv": "=",
    "not": "x",
    "mixed": "mixed",
    "blank": ".",
}

_VALID_MARKS = frozenset(MARK_SYMBOLS)


def expected_marks() -> dict:
    """Expected directory marks bundled with the package."""
    text = resources.files("ril.data").joinpath("expected_marks.json").read_text()
    data = json.loads(text)
    if tuple(data["kinds"]) != KIND_TAGS or tuple(data["classes"]) != CLASS_TAGS:
        raise ContractError("bundled expected marks are out of step with kind/class rosters")
    for kind, row in data["marks"].items():
        bad = [mark for mark in row if mark not in _VALID_MARKS]
        if len(row) != len(CLASS_TAGS) or bad:
            raise ContractError(f"malformed expected marks row for {kind}: {bad or len(row)}")
    return data


def default_thread_count() -> int:
    raw = os.environ.get("RIL_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ContractError(f"RIL_THREADS must be an integer, got {raw!r}") from exc
        if n < 1:
            raise ContractError("RIL_THREADS must be at least 1")
        return n
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class CellResult:
    kind: str
    transform_class: str
    expected: str
    observed: str
    reproduced: bool
    trials_run: int
    trials_skipped: int
    witness: dict | None
    detail: str
    elapsed: float

    def verdict_obj(self) -> dict:
        out = {
            "expected": self.expected,
            "observed": self.observed,
            "reproduced": self.reproduced,
            "trials_run": self.trials_run,
            "trials_skipped": self.trials_skipped,
        }
        if self.detail:
            out["detail"] = self.detail
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass(frozen=True)
class TableReport:
    cells: tuple[CellResult, ...]
    seed: int
    trials: int
    budget: int

    @property
    def all_reproduced(self) -> bool:
        return all(c.reproduced for c in self.cells)

    def mismatches(self) -> list[CellResult]:
        return [c for c in self.cells if not c.reproduced]

    def verdicts_obj(self) -> dict:
        """Deterministic outcome record: independent of threads and timing."""
        cells: dict[str, dict[str, dict]] = {}
        for c in self.cells:
            cells.setdefault(c.kind, {})[c.transform_class] = c.verdict_obj()
        return {
            "kinds": list(KIND_TAGS),
            "classes": list(CLASS_TAGS),
            "seed": self.seed,
            "trials": self.trials,
            "budget": self.budget,
            "cells": cells,
            "all_reproduced": self.all_reproduced,
        }

    def report_obj(self) -> dict:
        out = self.verdicts_obj()
        out["timings"] = {
            f"{c.kind}/{c.transform_class}": round(c.elapsed, 6) for c in self.cells
        }
        out["total_seconds"] = round(sum(c.elapsed for c in self.cells), 6)
        return out


def _observed_mark(status: str) -> str:
    return {"invariant": "inv", "counterexample_found": "not", "skipped": "blank"}[status]


def _run_cell(kind: str, cls: str, expected: str, cfg: CheckConfig) -> CellResult:
    t0 = time.perf_counter()
    if expected == "blank":
        return CellResult(
            kind=kind, transform_class=cls, expected=expected, observed="blank",
            reproduced=True, trials_run=0, trials_skipped=0, witness=None,
            detail="no claim for this cell", elapsed=time.perf_counter() - t0,
        )
    if expected == "mixed":
        # Both halves must hold: a fixed MDP where the search finds a
        # counterexample, and one where checking finds none.
        found = search_counterexample(kind, cls, cfg, mdp=two_action_loop_mdp())
        held = check_invariance(kind, cls, cfg, mdp=chain_mdp())
        ok = found.status == STATUS_COUNTEREXAMPLE and held.status == STATUS_INVARIANT
        observed = "mixed" if ok else f"{_observed_mark(found.status)}/{_observed_mark(held.status)}"
        return CellResult(
            kind=kind, transform_class=cls, expected=expected, observed=observed,
            reproduced=ok,
            trials_run=found.trials_run + held.trials_run,
            trials_skipped=found.trials_skipped + held.trials_skipped,
            witness=found.witness,
            detail="sensitive and insensitive proof MDPs" if ok else "mixed halves disagree",
            elapsed=time.perf_counter() - t0,
        )
    if expected in ("inv", "inv_special"):
        verdict = check_invariance(kind, cls, cfg)
        observed = _observed_mark(verdict.status)
        return CellResult(
            kind=kind, transform_class=cls, expected=expected, observed=observed,
            reproduced=verdict.status == STATUS_INVARIANT,
            trials_run=verdict.trials_run, trials_skipped=verdict.trials_skipped,
            witness=verdict.witness, detail=verdict.detail,
            elapsed=time.perf_counter() - t0,
        )
    verdict = search_counterexample(kind, cls, cfg)
    observed = _observed_mark(verdict.status)
    return CellResult(
        kind=kind, transform_class=cls, expected=expected, observed=observed,
        reproduced=verdict.status == STATUS_COUNTEREXAMPLE,
        trials_run=verdict.trials_run, trials_skipped=verdict.trials_skipped,
        witness=verdict.witness, detail=verdict.detail,
        elapsed=time.perf_counter() - t0,
    )


def reproduce_directory_table(cfg: CheckConfig, threads: int | None = None) -> TableReport:
    """Run every directory cell and compare against the expected marks.

    Cells execute in a thread pool; the outcome of each depends only on
    (cfg, kind, class), so reports agree cell-for-cell across thread counts.
    """
    marks = expected_marks()["marks"]
    jobs = [
        (kind, cls, marks[kind][j])
        for kind in KIND_TAGS
        for j, cls in enumerate(CLASS_TAGS)
    ]
    n = default_thread_count() if threads is None else threads
    if n < 1:
        raise ContractError("thread count must be at least 1")
    if n == 1:
        results = [_run_cell(k, c, e, cfg) for k, c, e in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            futures = [pool.submit(_run_cell, k, c, e, cfg) for k, c, e in jobs]
            results = [f.result() for f in futures]
    return TableReport(
        cells=tuple(results), seed=cfg.seed, trials=cfg.trials, budget=cfg.budget
    )


def render_table(report: TableReport, show_expected: bool = False) -> str:
    """ASCII rendering of the directory; '!' flags a non-reproduced cell."""
    col_heads = [f"T{j + 1}" for j in range(len(CLASS_TAGS))]
    by_cell = {(c.kind, c.transform_class): c for c in report.cells}
    name_w = max(len(k) for k in KIND_TAGS) + 2
    cell_w = max(len(s) for s in MARK_SYMBOLS.values()) + 2
    lines = []
    lines.append("Directory of reward-derived objects vs transformation classes")
    lines.append("")
    header = " " * name_w + "".join(h.ljust(cell_w) for h in col_heads)
    lines.append(header)
    for kind in KIND_TAGS:
        row = [kind.ljust(name_w)]
        for cls in CLASS_TAGS:
            c = by_cell[(kind, cls)]
            mark = MARK_SYMBOLS[c.expected] if show_expected else MARK_SYMBOLS.get(
                c.observed, c.observed
            )
            if not c.reproduced:
                mark += "!"
            row.append(mark.ljust(cell_w))
        lines.append("".join(row))
    lines.append("")
    for j, cls in enumerate(CLASS_TAGS):
        lines.append(f"  T{j + 1}: {cls}")
    lines.append("")
    legend = ", ".join(f"{v} {k}" for k, v in MARK_SYMBOLS.items())
    lines.append(f"  marks: {legend}; '!' marks a cell that failed to reproduce")
    status = "all cells reproduced" if report.all_reproduced else (
        f"{len(report.mismatches())} cells failed to reproduce"
    )
    lines.append(f"  seed {report.seed}, {report.trials} trials/cell: {status}")
    return "\n".join(lines)


def table_check_config(seed: int = 20250817, trials: int = 100, budget: int = 100) -> CheckConfig:
    """Configuration sized for the full directory run (small, fast MDPs)."""
    from .objects import Resolution
    from .sampling import SamplerConfig

    return CheckConfig(
        seed=seed,
        trials=trials,
        budget=budget,
        resolution=Resolution(max_fragment_len=2, lasso_prefix_cap=2, lasso_cycle_cap=2),
        sampler=SamplerConfig(n_states=(2, 4), n_actions=(2, 3), sparsity=0.4, orphan_prob=0.3),
    )
