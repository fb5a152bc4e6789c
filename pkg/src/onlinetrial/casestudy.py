"""STAMPEDE case study: replay the reported p-values through every procedure.

Seven comparisons against the control arm, reported in four batches.
Each procedure produces a rejection set and the level ``alpha_8`` it would
assign to an eighth arm. The published tables are kept here as golden data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import error_control as ec
from .oracle import OracleReport

__all__ = [
    "ArmRecord",
    "CaseStudyInput",
    "CaseStudyRow",
    "STAMPEDE",
    "ALGORITHMS",
    "GOLDEN",
    "stampede",
    "load_case_study",
    "run_case_study",
    "format_rows",
    "compare_golden",
    "load_golden",
]

ALGORITHMS = ("uncorrected", "bonferroni", "addis_spending", "bh", "addis", "saffron",
              "lord", "lond", "batch_bh", "batch_prds", "batch_stbh")

ALPHAS = (0.025, 0.05, 0.1)


@dataclass(frozen=True)
class ArmRecord:
    label: str
    p_value: float
    batch: int


@dataclass(frozen=True)
class CaseStudyInput:
    arms: tuple
    alphas: tuple = ALPHAS
    n_bound: int = 20

    def __post_init__(self):
        batches = [a.batch for a in self.arms]
        if any(b < a for a, b in zip(batches, batches[1:])):
            raise ValueError("batch ids must be non-decreasing")
        for a in self.arms:
            if not 0 <= a.p_value <= 1:
                raise ValueError(f"arm {a.label}: p-value outside [0, 1]")
        if self.n_bound < len(self.arms):
            raise ValueError("n_bound is below the number of arms")

    @property
    def labels(self):
        return [a.label for a in self.arms]

    @property
    def p_values(self):
        return [a.p_value for a in self.arms]

    def batches(self):
        out, current = [], None
        for a in self.arms:
            if a.batch != current:
                out.append([])
                current = a.batch
            out[-1].append(a)
        return out


STAMPEDE = CaseStudyInput(arms=(
    ArmRecord("B", 0.450, 1),
    ArmRecord("C", 0.006, 1),
    ArmRecord("E", 0.022, 1),
    ArmRecord("D", 0.847, 2),
    ArmRecord("F", 0.130, 2),
    ArmRecord("G", 0.001, 3),
    ArmRecord("H", 0.266, 4),
))


def stampede(order="default", alphas=ALPHAS, n_bound=20):
    """Built-in STAMPEDE input; ``order="swapped"`` exchanges arms B and C."""
    arms = list(STAMPEDE.arms)
    if order == "swapped":
        arms[0], arms[1] = arms[1], arms[0]
    elif order != "default":
        raise ValueError(f"order must be 'default' or 'swapped', got {order!r}")
    return CaseStudyInput(tuple(arms), tuple(alphas), n_bound)


def load_case_study(path, alphas=None, n_bound=None):
    """Read a case-study JSON file: ``{"arms": [{"label", "p_value", "batch"}], ...}``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    unknown = set(doc) - {"arms", "alphas", "n_bound"}
    if unknown:
        raise ValueError(f"unknown key(s) in case-study input: {sorted(unknown)}")
    arms = []
    for k, a in enumerate(doc["arms"]):
        extra = set(a) - {"label", "p_value", "batch"}
        if extra:
            raise ValueError(f"arms[{k}]: unknown key(s) {sorted(extra)}")
        arms.append(ArmRecord(str(a["label"]), float(a["p_value"]), int(a.get("batch", k + 1))))
    return CaseStudyInput(tuple(arms),
                          tuple(alphas or doc.get("alphas", ALPHAS)),
                          int(n_bound or doc.get("n_bound", 20)))


@dataclass(frozen=True)
class CaseStudyRow:
    algorithm: str
    alpha: float
    rejected: tuple
    alpha8: float | None

    @property
    def display(self):
        return ec.display_name(self.algorithm)


def run_case_study(inp: CaseStudyInput, algorithms=ALGORITHMS, overrides=None):
    overrides = overrides or {}
    rows = []
    for name in algorithms:
        key = "bh" if name.lower() == "bh" else ec.canonical_name(name)
        for alpha in inp.alphas:
            if key == "bh":
                mask = ec.bh_procedure(inp.p_values, alpha)
                rejected = [a.label for a, r in zip(inp.arms, mask) if r]
                alpha8 = None
            else:
                proc = ec.make_procedure(key, alpha, inp.n_bound, **overrides.get(key, {}))
                rejected = []
                if proc.is_batch:
                    for batch in inp.batches():
                        ds = proc.test_batch([a.p_value for a in batch])
                        rejected += [a.label for a, d in zip(batch, ds) if d.rejected]
                else:
                    for a in inp.arms:
                        if proc.test_one(a.p_value).rejected:
                            rejected.append(a.label)
                alpha8 = proc.next_level()
            rows.append(CaseStudyRow(key, alpha, tuple(sorted(rejected)), alpha8))
    return rows


def format_rows(rows):
    """Text table: one block per alpha, lines like ``LOND: G | 0.0025``."""
    lines = []
    for alpha in dict.fromkeys(r.alpha for r in rows):
        lines.append(f"# alpha = {alpha:g}")
        for r in rows:
            if r.alpha != alpha:
                continue
            a8 = "--" if r.alpha8 is None else f"{ec.round_half_up(r.alpha8, 4):.4f}"
            rej = ", ".join(r.rejected)
            lines.append(f"{r.display}: {rej} | {a8}" if rej else f"{r.display}: | {a8}")
    return "\n".join(lines) + "\n"


def _golden(rows):
    out = {}
    for name, rej, a8 in rows:
        out[name] = {str(a): {"rejected": list(r), "alpha8": v}
                     for a, r, v in zip(ALPHAS, rej, a8)}
    return out


_CEG, _CG, _G, _NONE = ("C", "E", "G"), ("C", "G"), ("G",), ()

GOLDEN = {
    "default": _golden([
        ("uncorrected", (_CEG, _CEG, _CEG), (0.0250, 0.0500, 0.1000)),
        ("bonferroni", (_G, _G, _G), (0.0013, 0.0025, 0.0050)),
        ("addis_spending", (_G, _G, _G), (0.0005, 0.0011, 0.0021)),
        ("bh", (_CG, _CG, _CEG), (None, None, None)),
        ("addis", (_NONE, _G, _G), (0.0003, 0.0016, 0.0031)),
        ("saffron", (_G, _CG, _CEG), (0.0041, 0.0165, 0.0412)),
        ("lord", (_NONE, _NONE, _NONE), (0.0001, 0.0002, 0.0003)),
        ("lond", (_G, _G, _G), (0.0025, 0.0050, 0.0100)),
        ("batch_bh", (_G, _CG, _CEG), (0.0019, 0.0057, 0.0151)),
        ("batch_prds", (_G, _CG, _CEG), (0.0019, 0.0057, 0.0151)),
        ("batch_stbh", (_CG, _CEG, _CEG), (0.0381, 0.1015, 0.1238)),
    ]),
    "swapped": _golden([
        ("uncorrected", (_CEG, _CEG, _CEG), (0.0250, 0.0500, 0.1000)),
        ("bonferroni", (_G, _G, _G), (0.0013, 0.0025, 0.0050)),
        ("addis_spending", (_G, _CG, _CG), (0.0005, 0.0011, 0.0021)),
        ("bh", (_CG, _CG, _CEG), (None, None, None)),
        ("addis", (_NONE, _G, _CG), (0.0003, 0.0016, 0.0062)),
        ("saffron", (_G, _CG, _CEG), (0.0041, 0.0165, 0.0412)),
        ("lord", (_NONE, _NONE, _NONE), (0.0001, 0.0002, 0.0003)),
        ("lond", (_G, _G, _G), (0.0025, 0.0050, 0.0100)),
        ("batch_bh", (_G, _CG, _CEG), (0.0019, 0.0057, 0.0151)),
        ("batch_prds", (_G, _CG, _CEG), (0.0019, 0.0057, 0.0151)),
        ("batch_stbh", (_CG, _CEG, _CEG), (0.0381, 0.1015, 0.1238)),
    ]),
}

# printed values carry 4 decimals
ALPHA8_TOL = 0.00005


def load_golden(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def alpha8_matches(observed, printed):
    """Printed 4-decimal value is the half-up rounding of ``observed``.

    Equivalent to |observed - printed| <= 0.00005 with the half-way case
    resolved upwards, without floating-point noise at the boundary.
    """
    return ec.round_half_up(observed, 4) == round(printed, 4)


def compare_golden(golden=None, orders=("default", "swapped"), overrides=None):
    """One report per rejection-set cell and per alpha_8 cell of the golden tables."""
    golden = GOLDEN if golden is None else golden
    reports = []
    for order in orders:
        table = golden[order]
        rows = run_case_study(stampede(order), tuple(table), overrides)
        for row in rows:
            cell = table[row.algorithm][str(row.alpha)]
            tag = f"{order}:{row.display}[alpha={row.alpha:g}]"
            expected = tuple(sorted(cell["rejected"]))
            reports.append(OracleReport(f"{tag}.rejected", expected, "published table",
                                        row.rejected, 0.0, expected == row.rejected))
            if cell["alpha8"] is None and row.alpha8 is None:
                continue
            ok = (cell["alpha8"] is not None and row.alpha8 is not None
                  and alpha8_matches(row.alpha8, cell["alpha8"]))
            reports.append(OracleReport(f"{tag}.alpha8", cell["alpha8"], "published table",
                                        row.alpha8, ALPHA8_TOL, bool(ok)))
    return reports
