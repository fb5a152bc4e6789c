"""Online multiple-testing procedures for FDR and FWER control.

Every procedure is a small state machine: it hands out a testing level for
the next hypothesis (``next_level``), consumes a p-value (``test_one`` or, for
the batched procedures, ``test_batch``) and updates its history. Levels only
ever depend on past decisions.

Offline comparators (Benjamini-Hochberg, Storey-BH, uncorrected testing) are
plain functions returning boolean rejection masks.
"""

from __future__ import annotations

import copy
import math
from decimal import ROUND_HALF_UP, Decimal
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "BudgetExhaustedError",
    "GammaSeq",
    "make_gamma",
    "ProcedureParams",
    "TestDecision",
    "OnlineProcedure",
    "BatchProcedure",
    "Uncorrected",
    "Bonferroni",
    "LOND",
    "LORD",
    "SAFFRON",
    "ADDIS",
    "ADDISSpending",
    "BatchBH",
    "BatchPRDS",
    "BatchStBH",
    "bh_procedure",
    "storey_bh",
    "uncorrected",
    "make_procedure",
    "PROCEDURES",
]


class BudgetExhaustedError(RuntimeError):
    """Raised when a procedure is asked to test beyond its bound ``n_bound``."""


# ---------------------------------------------------------------------------
# gamma sequences
# ---------------------------------------------------------------------------

GAMMA_KINDS = ("constant", "power", "lord_log")


@dataclass(frozen=True)
class GammaSeq:
    """Non-negative weights gamma_1..gamma_N summing to one over the horizon."""

    values: np.ndarray
    kind: str
    exponent: float | None = None
    raw: np.ndarray | None = None  # unnormalised weights, values = raw / raw.sum()

    def __post_init__(self):
        if self.raw is None:
            object.__setattr__(self, "raw", self.values.copy())
        self.values.setflags(write=False)
        self.raw.setflags(write=False)
        object.__setattr__(self, "_norm", float(self.raw.sum()))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        """1-based access, matching the usual gamma_i notation."""
        if i < 1 or i > len(self.values):
            raise IndexError(f"gamma index {i} outside 1..{len(self.values)}")
        return float(self.values[i - 1])

    def cumsum(self, i):
        return float(np.sum(self.values[:i]))

    def scaled(self, i, factor):
        """factor * gamma_i, dividing by the normaliser last to save a rounding."""
        if i < 1 or i > len(self.values):
            raise IndexError(f"gamma index {i} outside 1..{len(self.values)}")
        return factor * float(self.raw[i - 1]) / self._norm


def make_gamma(kind, n_bound, exponent=1.6):
    """Build a gamma sequence of length ``n_bound`` normalised to sum to one.

    ``kind`` is one of ``"constant"`` (all equal), ``"power"``
    (gamma_i proportional to i^-exponent) or ``"lord_log"``
    (gamma_i proportional to log(max(i, 2)) / (i exp(sqrt(log i)))).
    """
    n_bound = int(n_bound)
    if n_bound < 1:
        raise ValueError("n_bound must be >= 1")
    i = np.arange(1, n_bound + 1, dtype=float)
    if kind == "constant":
        raw = np.ones(n_bound)
        exponent = None
    elif kind == "power":
        if exponent is None or not exponent > 0:
            raise ValueError(f"power-law exponent must be > 0, got {exponent}")
        raw = i ** -float(exponent)
    elif kind == "lord_log":
        raw = np.log(np.maximum(i, 2.0)) / (i * np.exp(np.sqrt(np.log(i))))
        exponent = None
    else:
        raise ValueError(f"unknown gamma kind {kind!r}; expected one of {GAMMA_KINDS}")
    return GammaSeq(raw / raw.sum(), kind, exponent, raw)


# ---------------------------------------------------------------------------
# parameters and decisions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProcedureParams:
    alpha: float
    n_bound: int
    gamma: GammaSeq
    lam: float | None = None
    tau: float | None = None
    w0: float | None = None
    b0: float | None = None

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.n_bound < 1:
            raise ValueError("n_bound must be >= 1")
        if len(self.gamma) != self.n_bound:
            raise ValueError("gamma sequence length must equal n_bound")
        if self.lam is not None and not 0 < self.lam < 1:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.tau is not None and not 0 < self.tau <= 1:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.w0 is not None and self.w0 < 0:
            raise ValueError("w0 must be non-negative")


class TestDecision(NamedTuple):
    index: int
    level: float
    p_value: float
    rejected: bool

    __test__ = False  # keep pytest from collecting this as a test class


def _check_p(p):
    p = float(p)
    if not 0.0 <= p <= 1.0:  # also rejects NaN
        raise ValueError(f"p-value must lie in [0, 1], got {p}")
    return p


# ---------------------------------------------------------------------------
# fully sequential procedures
# ---------------------------------------------------------------------------


class OnlineProcedure:
    """Base class for procedures that test one hypothesis at a time.

    Subclasses implement ``_level(t)`` giving the level for test ``t``
    (1-based) from the current history, and may extend ``_update``.
    """

    name = "online"
    is_batch = False
    controls = "FDR"

    def __init__(self, params: ProcedureParams):
        self.params = params
        self.test_index = 0
        self.rejection_times: list[int] = []
        self.levels: list[float] = []
        self.p_values: list[float] = []

    # -- public API --------------------------------------------------------

    @property
    def alpha(self):
        return self.params.alpha

    @property
    def gamma(self):
        return self.params.gamma

    @property
    def n_rejections(self):
        return len(self.rejection_times)

    def next_level(self):
        """Level the next hypothesis would be tested at; does not mutate state."""
        if self.test_index >= self.params.n_bound:
            raise BudgetExhaustedError(
                f"{self.name}: all {self.params.n_bound} tests of the bound are used")
        return self._level(self.test_index + 1)

    def test_one(self, p_value):
        p = _check_p(p_value)
        level = self.next_level()
        rejected = p <= level
        self.test_index += 1
        self.levels.append(level)
        self.p_values.append(p)
        if rejected:
            self.rejection_times.append(self.test_index)
        self._update(p, rejected)
        return TestDecision(self.test_index, level, p, rejected)

    def test_many(self, p_values):
        return [self.test_one(p) for p in p_values]

    def copy(self):
        return copy.deepcopy(self)

    # -- hooks -------------------------------------------------------------

    def _level(self, t):
        raise NotImplementedError

    def _update(self, p, rejected):
        pass

    def __repr__(self):
        return (f"{type(self).__name__}(alpha={self.alpha}, n_bound={self.params.n_bound}, "
                f"tested={self.test_index}, rejected={self.n_rejections})")


class Uncorrected(OnlineProcedure):
    """Every hypothesis tested at the nominal alpha."""

    name = "Uncorrected"
    controls = "none"

    def _level(self, t):
        return self.alpha


class Bonferroni(OnlineProcedure):
    """Alpha-spending with weights gamma_i; constant gamma gives alpha / n_bound."""

    name = "Bonferroni"
    controls = "FWER"

    def _level(self, t):
        return self.gamma.scaled(t, self.alpha)


class LOND(OnlineProcedure):
    """alpha_t = alpha * gamma_t * (D(t-1) + 1), D counting past discoveries."""

    name = "LOND"

    def _level(self, t):
        return self.gamma.scaled(t, self.alpha * (self.n_rejections + 1))


class LORD(OnlineProcedure):
    """LORD++: wealth w0 up front, payout b0 at the first discovery, alpha after.

    alpha_t = w0 gamma_t + b0 gamma_{t - tau_1} + alpha * sum_{j>=2} gamma_{t - tau_j}
    """

    name = "LORD"

    def __init__(self, params):
        if params.w0 is None or params.b0 is None:
            raise ValueError("LORD needs w0 and b0")
        if params.w0 + params.b0 > params.alpha + 1e-15:
            raise ValueError("LORD requires w0 + b0 <= alpha")
        super().__init__(params)

    def _level(self, t):
        g = self.gamma
        level = self.params.w0 * g[t]
        if self.rejection_times:
            level += self.params.b0 * g[t - self.rejection_times[0]]
            level += self.alpha * sum(g[t - r] for r in self.rejection_times[1:])
        return level


class SAFFRON(OnlineProcedure):
    """SAFFRON with candidacy threshold lambda.

    A p-value at most lambda is a candidate. Candidates do not advance the
    gamma index, so wealth is only drawn down by weak signals::

        alpha_t = min(lambda, (1 - lambda) * (w0 g[t - C0] + (alpha - w0) g[t - tau_1 - C1]
                                              + alpha * sum_{j>=2} g[t - tau_j - Cj]))

    where ``Cj`` counts candidates after the j-th rejection (``C0`` all of them).
    """

    name = "SAFFRON"

    def __init__(self, params):
        if params.lam is None or params.w0 is None:
            raise ValueError("SAFFRON needs lambda and w0")
        if params.w0 > params.alpha:
            raise ValueError("SAFFRON requires w0 <= alpha")
        super().__init__(params)
        # cand_cum[i] = number of candidates among the first i tests
        self.cand_cum = [0]

    def _level(self, t):
        g = self.gamma
        lam, w0 = self.params.lam, self.params.w0
        n_cand = self.cand_cum[-1]
        wealth = w0 * g[t - n_cand]
        for j, tau_j in enumerate(self.rejection_times):
            c_after = n_cand - self.cand_cum[tau_j]
            wealth += (self.alpha - w0 if j == 0 else self.alpha) * g[t - tau_j - c_after]
        return min(lam, (1 - lam) * wealth)

    def _update(self, p, rejected):
        self.cand_cum.append(self.cand_cum[-1] + (p <= self.params.lam))


class ADDIS(OnlineProcedure):
    """ADDIS: SAFFRON plus discarding of p-values above tau.

    Discarded p-values leave the gamma index untouched. Candidacy is judged on
    the rescaled p-value p / tau, i.e. p <= lambda * tau, and the levels are::

        alpha_t = min(lambda*tau, w0 g[S - C0 + 1] + (B - w0) g[S - S_1 - C1 + 1]
                                  + B * sum_{j>=2} g[S - S_j - Cj + 1])

    with ``B = tau (1 - lambda) alpha``, ``S`` the number of selected
    (non-discarded) tests so far, ``S_j`` the selected count up to the j-th
    rejection and ``Cj`` the candidates after it.
    """

    name = "ADDIS"

    def __init__(self, params):
        if params.lam is None or params.tau is None or params.w0 is None:
            raise ValueError("ADDIS needs lambda, tau and w0")
        budget = params.tau * (1 - params.lam) * params.alpha
        if params.w0 > budget + 1e-15:
            raise ValueError("ADDIS requires w0 <= tau * (1 - lambda) * alpha")
        super().__init__(params)
        self.sel_cum = [0]
        self.cand_cum = [0]

    def _level(self, t):
        g = self.gamma
        lam, tau, w0 = self.params.lam, self.params.tau, self.params.w0
        budget = tau * (1 - lam) * self.alpha
        n_sel, n_cand = self.sel_cum[-1], self.cand_cum[-1]
        wealth = w0 * g[n_sel - n_cand + 1]
        for j, tau_j in enumerate(self.rejection_times):
            idx = n_sel - self.sel_cum[tau_j] - (n_cand - self.cand_cum[tau_j]) + 1
            wealth += (budget - w0 if j == 0 else budget) * g[idx]
        return min(lam * tau, wealth)

    def _update(self, p, rejected):
        self.sel_cum.append(self.sel_cum[-1] + (p <= self.params.tau))
        self.cand_cum.append(self.cand_cum[-1] + (p <= self.params.lam * self.params.tau))


class ADDISSpending(OnlineProcedure):
    """ADDIS-spending, an online FWER procedure.

    alpha_t = alpha (tau - lambda) gamma_{1 + #{j < t : lambda < p_j <= tau}}

    Only selected non-candidates (``lambda < p <= tau``) consume budget.
    """

    name = "ADDIS-spending"
    controls = "FWER"

    def __init__(self, params):
        if params.lam is None or params.tau is None:
            raise ValueError("ADDIS-spending needs lambda and tau")
        if not params.lam < params.tau:
            raise ValueError("ADDIS-spending requires lambda < tau")
        super().__init__(params)
        self.spent_index = 0

    def _level(self, t):
        lam, tau = self.params.lam, self.params.tau
        return self.alpha * (tau - lam) * self.gamma[self.spent_index + 1]

    def _update(self, p, rejected):
        if self.params.lam < p <= self.params.tau:
            self.spent_index += 1


# ---------------------------------------------------------------------------
# offline comparators
# ---------------------------------------------------------------------------


def _as_pvalues(p_values):
    p = np.asarray(p_values, dtype=float).reshape(-1)
    if p.size and not (np.all(p >= 0) and np.all(p <= 1)):
        raise ValueError("p-values must lie in [0, 1]")
    return p


def _bh_count(sorted_p, level):
    m = sorted_p.size
    if m == 0:
        return 0
    below = np.nonzero(sorted_p <= level * np.arange(1, m + 1) / m)[0]
    return int(below[-1]) + 1 if below.size else 0


def _bh_mask(p, alpha):
    # unchecked core of bh_procedure, for inner loops
    sp = np.sort(p)
    k = _bh_count(sp, alpha)
    if k == 0:
        return np.zeros(p.size, dtype=bool)
    return p <= sp[k - 1]


def bh_procedure(p_values, alpha):
    """Benjamini-Hochberg step-up rule; returns a boolean rejection mask."""
    return _bh_mask(_as_pvalues(p_values), alpha)


def storey_pi0(p_values, lam):
    """Storey's null-proportion estimate (1 + #{p > lambda}) / (m (1 - lambda))."""
    p = np.asarray(p_values, dtype=float)
    return (1.0 + np.count_nonzero(p > lam)) / (p.size * (1.0 - lam))


def storey_bh(p_values, alpha, lam=0.5):
    """BH at level alpha / pi0, with pi0 the Storey estimate at threshold lambda."""
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    p = _as_pvalues(p_values)
    if p.size == 0:
        return np.zeros(0, dtype=bool)
    return _bh_mask(p, alpha / storey_pi0(p, lam))


def uncorrected(p_values, alpha):
    """Reject every p-value at most alpha."""
    return _as_pvalues(p_values) <= alpha


# ---------------------------------------------------------------------------
# batched procedures
# ---------------------------------------------------------------------------


@dataclass
class _BatchRecord:
    size: int
    level: float
    n_rejected: int
    r_plus: int
    weight: float = 1.0


class BatchProcedure:
    """Base class for the online batch procedures.

    The gamma sequence is indexed by batch number. For batch ``t`` with ``n``
    p-values the test level is the per-batch BH level ``alpha_t``; see each
    subclass for the recurrence.
    """

    name = "batch"
    is_batch = True
    controls = "FDR"

    def __init__(self, params: ProcedureParams):
        self.params = params
        self.test_index = 0
        self.batches: list[_BatchRecord] = []
        self.rejection_times: list[int] = []

    @property
    def alpha(self):
        return self.params.alpha

    @property
    def gamma(self):
        return self.params.gamma

    @property
    def n_rejections(self):
        return len(self.rejection_times)

    def next_level(self, batch_size=1):
        """Level for an immediately following batch of ``batch_size`` hypotheses."""
        if batch_size < 1:
            raise ValueError("batch must be non-empty")
        if self.test_index + batch_size > self.params.n_bound:
            raise BudgetExhaustedError(
                f"{self.name}: a batch of {batch_size} would exceed n_bound={self.params.n_bound}")
        return self._level(len(self.batches) + 1, batch_size)

    def test_batch(self, p_values):
        p = _as_pvalues(p_values)
        if p.size == 0:
            raise ValueError("batch must be non-empty")
        level = self.next_level(p.size)
        mask = self._reject(p, level)
        r_plus = 0
        if level > 0:
            for i in range(p.size):
                q = p.copy()
                q[i] = 0.0
                r_plus = max(r_plus, int(np.count_nonzero(self._reject(q, level))))
        self.batches.append(_BatchRecord(p.size, level, int(mask.sum()), r_plus, self._weight(p)))
        start = self.test_index
        self.test_index += p.size
        self.rejection_times.extend(start + 1 + np.flatnonzero(mask))
        return [TestDecision(start + i + 1, level, float(p[i]), bool(mask[i]))
                for i in range(p.size)]

    def copy(self):
        return copy.deepcopy(self)

    def _reject(self, p, level):
        return _bh_mask(p, level)

    def _weight(self, p):
        return 1.0

    def _spent(self):
        # Each past batch is charged against the rejections of all *other*
        # batches, so the charge shrinks as later discoveries arrive.
        total = sum(b.n_rejected for b in self.batches)
        spent = 0.0
        for b in self.batches:
            if b.r_plus > 0 and b.weight > 0:
                spent += b.level * b.weight * b.r_plus / (b.r_plus + total - b.n_rejected)
        return spent

    def _level(self, t, n):
        total = sum(b.n_rejected for b in self.batches)
        return (self.alpha * self.gamma.cumsum(t) - self._spent()) * (n + total) / n

    def __repr__(self):
        return (f"{type(self).__name__}(alpha={self.alpha}, n_bound={self.params.n_bound}, "
                f"batches={len(self.batches)}, rejected={self.n_rejections})")


class BatchBH(BatchProcedure):
    """BH within batches, levels recovering wealth from past discoveries.

    alpha_t = (alpha sum_{s<=t} gamma_s - sum_{s<t} alpha_s R+_s / (R+_s + R_{-s}))
              * (n_t + R) / n_t

    with ``R+_s`` the most rejections batch ``s`` would have made with one of
    its p-values set to zero and ``R_{-s}`` the rejections in the other batches.
    """

    name = "BatchBH"


class BatchPRDS(BatchProcedure):
    """BatchBH variant valid under positive dependence within a batch.

    alpha_t = alpha gamma_t (n_t + R) / n_t
    """

    name = "BatchPRDS"

    def _level(self, t, n):
        total = sum(b.n_rejected for b in self.batches)
        return self.alpha * self.gamma[t] * (n + total) / n


class BatchStBH(BatchProcedure):
    """Storey-BH within batches.

    Same recurrence as BatchBH, but a batch whose p-values are all at most
    lambda is charged nothing (weight ``k_s`` below is 0), and the within-batch
    rule is BH at ``alpha_t / pi0`` with pi0 the Storey estimate.
    """

    name = "BatchStBH"

    def __init__(self, params):
        if params.lam is None:
            raise ValueError("BatchStBH needs lambda")
        super().__init__(params)

    def _reject(self, p, level):
        return _bh_mask(p, level / storey_pi0(p, self.params.lam))

    def _weight(self, p):
        lam = self.params.lam
        n_above = np.count_nonzero(p > lam)
        return n_above / (1 + n_above - int(p.max() > lam))


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Defaults:
    cls: type
    gamma: str
    exponent: float | None = None
    lam: float | None = None
    tau: float | None = None
    w0: object = None  # callable of (alpha, lam, tau) or None
    b0: object = None  # callable of (alpha, w0) or None
    display: str = ""
    aliases: tuple = field(default=())


PROCEDURES = {
    "uncorrected": _Defaults(Uncorrected, "constant", display="Uncorrected"),
    "bonferroni": _Defaults(Bonferroni, "constant", display="Bonferroni"),
    "addis_spending": _Defaults(ADDISSpending, "power", 1.6, lam=0.25, tau=0.5,
                                display="ADDIS-spending"),
    "addis": _Defaults(ADDIS, "power", 1.6, lam=0.5, tau=0.5,
                       w0=lambda a, lam, tau: lam * tau * a / 2, display="ADDIS"),
    "saffron": _Defaults(SAFFRON, "power", 1.6, lam=0.5, w0=lambda a, lam, tau: a / 2,
                         display="SAFFRON"),
    "lord": _Defaults(LORD, "lord_log", w0=lambda a, lam, tau: a / 10,
                      b0=lambda a, w0: a - w0, display="LORD"),
    "lond": _Defaults(LOND, "constant", display="LOND"),
    "batch_bh": _Defaults(BatchBH, "power", 1.6, display="BatchBH"),
    "batch_prds": _Defaults(BatchPRDS, "power", 1.6, display="BatchPRDS"),
    "batch_stbh": _Defaults(BatchStBH, "power", 1.6, lam=0.5, display="BatchStBH"),
}

_OVERRIDABLE = {"gamma", "exponent", "lam", "tau", "w0", "b0"}


def canonical_name(name):
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    if key in PROCEDURES:
        return key
    for k, d in PROCEDURES.items():
        if d.display.lower() == name.strip().lower():
            return k
    raise KeyError(f"unknown procedure {name!r}; known: {', '.join(PROCEDURES)}")


def make_params(name, alpha, n_bound, **overrides):
    """Parameters for procedure ``name`` with the default settings filled in.

    Overrides accept ``gamma`` (kind string or a ``GammaSeq``), ``exponent``,
    ``lam``, ``tau``, ``w0`` and ``b0``.
    """
    d = PROCEDURES[canonical_name(name)]
    unknown = set(overrides) - _OVERRIDABLE
    if unknown:
        raise ValueError(f"unknown parameter(s) for {name}: {sorted(unknown)}")
    gamma = overrides.get("gamma", d.gamma)
    if not isinstance(gamma, GammaSeq):
        gamma = make_gamma(gamma, n_bound, overrides.get("exponent", d.exponent or 1.6))
    lam = overrides.get("lam", d.lam)
    tau = overrides.get("tau", d.tau)
    w0 = overrides.get("w0", d.w0(alpha, lam, tau) if d.w0 else None)
    b0 = overrides.get("b0", d.b0(alpha, w0) if d.b0 else None)
    return ProcedureParams(alpha=alpha, n_bound=int(n_bound), gamma=gamma,
                           lam=lam, tau=tau, w0=w0, b0=b0)


def make_procedure(name, alpha, n_bound, **overrides):
    """Fresh procedure instance, e.g. ``make_procedure("saffron", 0.025, 20)``."""
    d = PROCEDURES[canonical_name(name)]
    return d.cls(make_params(name, alpha, n_bound, **overrides))


def display_name(name):
    if name.strip().lower() == "bh":
        return "BH"
    return PROCEDURES[canonical_name(name)].display


def round_half_up(x, digits=4):
    """Round for table display, halves away from zero as printed tables do."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return x
    q = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))
