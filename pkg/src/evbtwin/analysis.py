"""Economic and usability arithmetic: phase-time aggregation from run logs,
manual-vs-robot comparison, return on investment, and SUS scoring.

The reference timing and cost figures ship as fixtures
(manual_times.json, costs.json, sus_survey.json); totals are always
recomputed from rows, never trusted from input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import (DistributionError, LabelMismatchError, RangeError,
                     ZeroInvestmentError)

TOOL_CHANGE_LABEL = "Tool change"
DEFAULT_TOOL_CHANGE_BUDGET_S = 13.75


@dataclass(frozen=True)
class CostModel:
    investment_items: tuple            # (label, eur) pairs
    net_savings_eur_per_year: float
    investment_cost_eur: float         # as printed; items are also summed
    tool_change_budget_s: float = DEFAULT_TOOL_CHANGE_BUDGET_S

    def __post_init__(self):
        if any(eur < 0 for _, eur in self.investment_items):
            raise ValueError("investment items must be non-negative")

    @property
    def items_total_eur(self) -> float:
        return float(sum(eur for _, eur in self.investment_items))

    @staticmethod
    def from_dict(doc: dict) -> "CostModel":
        return CostModel(
            investment_items=tuple((i["label"], float(i["eur"]))
                                   for i in doc["investment_items"]),
            net_savings_eur_per_year=float(doc["net_savings_eur_per_year"]),
            investment_cost_eur=float(doc["investment_cost_eur"]),
            tool_change_budget_s=float(doc.get("tool_change_budget_s",
                                               DEFAULT_TOOL_CHANGE_BUDGET_S)),
        )


@dataclass(frozen=True)
class PhaseTimeTable:
    rows: tuple                        # (label, seconds) pairs

    @property
    def total_s(self) -> float:
        """Always the row sum; a stored total is never trusted."""
        return float(sum(sec for _, sec in self.rows))

    def seconds(self, label: str) -> float:
        for lab, sec in self.rows:
            if lab == label:
                return sec
        raise LabelMismatchError(f"no row labeled {label!r}")

    def labels(self) -> list:
        return [lab for lab, _ in self.rows]

    def to_dict(self) -> dict:
        return {"rows": [{"label": lab, "seconds": sec} for lab, sec in self.rows],
                "total_s": self.total_s}


def roi(ns_eur: float, ic_eur: float) -> float:
    """Return on investment: (net savings - investment) / investment."""
    if ic_eur <= 0:
        raise ZeroInvestmentError("investment cost must be positive")
    return (ns_eur - ic_eur) / ic_eur


def phase_table_from_log(records, phase_labels: dict,
                         tool_change_budget_s: float = DEFAULT_TOOL_CHANGE_BUDGET_S) -> PhaseTimeTable:
    """Group completed records into labeled phases.

    Tool-change time inside a record is stripped from its phase row; each
    change is charged to the Tool change row at the fixed budget. `records`
    accepts OperationRecord objects or their dict form; `phase_labels` maps a
    record's component group to its display label.
    """
    totals: dict = {}
    order: list = []
    change_count = 0
    for rec in records:
        doc = rec.to_dict() if hasattr(rec, "to_dict") else rec
        if doc.get("outcome") != "completed":
            continue
        group = doc.get("group")
        label = phase_labels.get(group, group or doc["component_id"])
        phases = doc.get("skill_plan", {}).get("phases", [])
        tc_time = sum(p["duration_s"] for p in phases if p.get("is_tool_change"))
        if any(p.get("is_tool_change") for p in phases):
            change_count += 1
        if label not in totals:
            totals[label] = 0.0
            order.append(label)
        totals[label] += doc["duration_s"] - tc_time
    rows = [(label, totals[label]) for label in order]
    if change_count:
        rows.append((TOOL_CHANGE_LABEL, change_count * tool_change_budget_s))
    return PhaseTimeTable(rows=tuple(rows))


def compare_tables(manual: PhaseTimeTable, robot: PhaseTimeTable) -> dict:
    """Per-phase ratios and deltas; rows where the robot is slower are flagged."""
    m_labels = manual.labels()
    if m_labels != robot.labels():
        raise LabelMismatchError(
            f"row labels differ: {m_labels} vs {robot.labels()}")
    rows = []
    for label in m_labels:
        m = manual.seconds(label)
        r = robot.seconds(label)
        rows.append({
            "label": label,
            "manual_s": m,
            "robot_s": r,
            "ratio": (r / m) if m > 0 else float("inf"),
            "robot_slower": r > m,
        })
    return {
        "rows": rows,
        "manual_total_s": manual.total_s,
        "robot_total_s": robot.total_s,
        "flagged": [row["label"] for row in rows if row["robot_slower"]],
    }


def sus_score(responses) -> float:
    """System Usability Scale score in [0, 100] from ten 1-5 Likert answers.

    Odd items contribute (r - 1), even items (5 - r), the sum scaled by 2.5.
    """
    r = list(responses)
    if len(r) != 10:
        raise RangeError(f"need 10 responses, got {len(r)}")
    total = 0.0
    for i, value in enumerate(r, start=1):
        if not 1 <= value <= 5:
            raise RangeError(f"question {i}: Likert value {value} outside 1..5")
        total += (value - 1) if i % 2 == 1 else (5 - value)
    return total * 2.5


def sus_mean_from_distribution(distributions) -> float:
    """Mean SUS score from per-question Likert percentage marginals.

    Each of the ten distributions holds percentages for answers 1..5 summing
    to 100 (+-0.5 for published rounding); the expected Likert value per
    question feeds the standard SUS formula.
    """
    if len(distributions) != 10:
        raise DistributionError(
            f"need distributions for 10 questions, got {len(distributions)}")
    total = 0.0
    for i, dist in enumerate(distributions, start=1):
        if len(dist) != 5:
            raise DistributionError(f"question {i}: need 5 percentages")
        if any(p < 0 for p in dist):
            raise DistributionError(f"question {i}: negative percentage")
        s = sum(dist)
        if abs(s - 100.0) > 0.5:
            raise DistributionError(
                f"question {i}: percentages sum to {s}, not 100")
        expected = sum(k * p for k, p in zip(range(1, 6), dist)) / s
        total += (expected - 1) if i % 2 == 1 else (5 - expected)
    return total * 2.5


def load_costs(path) -> CostModel:
    with open(path) as fh:
        return CostModel.from_dict(json.load(fh))


def load_manual_table(path):
    """Reference manual timings; returns (table, printed total or None).

    The published manual total disagrees with its own row sum, so both are
    carried and the report flags the discrepancy.
    """
    with open(path) as fh:
        doc = json.load(fh)
    table = PhaseTimeTable(rows=tuple((r["label"], float(r["seconds"]))
                                      for r in doc["rows"]))
    printed = doc.get("printed_total_s")
    return table, (float(printed) if printed is not None else None)


def analyze_run(records, phase_labels: dict, costs: CostModel,
                manual: PhaseTimeTable | None = None,
                manual_printed_total_s: float | None = None) -> dict:
    """Full report: phase table, optional manual comparison, item sums, ROI."""
    table = phase_table_from_log(records, phase_labels,
                                 costs.tool_change_budget_s)
    report = {
        "phase_table": table.to_dict(),
        "investment_items_total_eur": costs.items_total_eur,
        "investment_cost_eur": costs.investment_cost_eur,
        "items_vs_printed_gap_eur": costs.investment_cost_eur - costs.items_total_eur,
        "net_savings_eur_per_year": costs.net_savings_eur_per_year,
        "roi": roi(costs.net_savings_eur_per_year, costs.investment_cost_eur),
    }
    if manual is not None:
        shared = [lab for lab in manual.labels() if lab in table.labels()]
        robot_view = PhaseTimeTable(rows=tuple(
            (lab, table.seconds(lab)) for lab in shared))
        manual_view = PhaseTimeTable(rows=tuple(
            (lab, manual.seconds(lab)) for lab in shared))
        report["comparison"] = compare_tables(manual_view, robot_view)
        report["manual_rows_total_s"] = manual.total_s
        if manual_printed_total_s is not None:
            report["manual_printed_total_s"] = manual_printed_total_s
            report["manual_total_discrepancy"] = (
                abs(manual_printed_total_s - manual.total_s) > 0.5)
    return report
