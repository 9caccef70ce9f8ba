"""Monthly evaluation scoring and categorization.

A call is graded question by question on an integer 0..5 scale where 0
means "not applicable". The call score is the sum of the applicable
grades divided by how many there were; the monthly score pools every
applicable grade of every evaluated call of the month (it is NOT the
mean of the per-call scores). Scores are kept as exact rationals so
that categorization at the interval boundaries can never flip from
float rounding; rounding happens only at display time (half-up, two
decimals).

Categorization rules (half-open intervals, boundary in the upper bin):

    not met       score < 2
    met some      2 <= score < 3
    met           3 <= score < 4      (optionally split at 3.5)
    exceeded      4 <= score < 4.75
    far exceeded  score >= 4.75
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP
from enum import Enum, IntEnum
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence


class ScoringError(ValueError):
    """Base class for scoring failures."""


class AllQuestionsNotApplicable(ScoringError):
    """Every question was marked 0; there is nothing to score."""


class MixedEvaluationKinds(ScoringError):
    """Calls of different evaluation kinds pooled into one monthly score."""


class ScoreOutOfRange(ScoringError):
    """A score outside [1, 5] reached categorize()."""


class UnexpectedCallCountWarning(UserWarning):
    """A month was scored from a number of calls other than six."""


class EvaluationKind(Enum):
    CUSTOMER_SERVICE = "customer-service"
    BUSINESS_NEED = "business-need"


class Category(IntEnum):
    """Performance category, ordered worst to best."""

    NOT_MET = 1
    MET_SOME = 2
    MET = 3
    EXCEEDED = 4
    FAR_EXCEEDED = 5


class MetSub(IntEnum):
    """Sub-classes of MET, split at 3.5."""

    MET_1 = 1
    MET_2 = 2


# Canonical label keys used for dataset labels, census dicts and reports.
CATEGORY_KEYS = {
    Category.NOT_MET: "not_met",
    Category.MET_SOME: "met_some",
    Category.MET: "met",
    Category.EXCEEDED: "exceeded",
    Category.FAR_EXCEEDED: "far_exceeded",
}

CATEGORY_DISPLAY = {
    "not_met": "Not Met",
    "met_some": "Met Some",
    "met": "Met",
    "met_1": "Met 1",
    "met_2": "Met 2",
    "exceeded": "Exceeded",
    "far_exceeded": "Far Exceeded",
}

# Every label key in worst-to-best order (the met sub-classes slot in
# where the parent class sits).
CATEGORY_KEY_ORDER = (
    "not_met",
    "met_some",
    "met",
    "met_1",
    "met_2",
    "exceeded",
    "far_exceeded",
)

MIN_QUESTION = 0
MAX_QUESTION = 5
CUSTOMER_SERVICE_QUESTIONS = 11
BUSINESS_NEED_QUESTIONS = (8, 16)
EXPECTED_CALLS_PER_MONTH = 6

# Lower bounds of the categories, exact rationals.
_MET_SOME_LO = Fraction(2)
_MET_LO = Fraction(3)
_MET_SPLIT = Fraction(7, 2)
_EXCEEDED_LO = Fraction(4)
_FAR_EXCEEDED_LO = Fraction(19, 4)
_SCORE_MIN = Fraction(1)
_SCORE_MAX = Fraction(5)


def _validate_question(value: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ScoringError(f"question score must be an integer, got {value!r}")
    if not MIN_QUESTION <= value <= MAX_QUESTION:
        raise ScoringError(f"question score must be in 0..5, got {value}")
    return value


@dataclass(frozen=True)
class CallEvaluation:
    """One evaluated call: a kind, its question grades and the product.

    Customer-service evaluations carry exactly 11 questions; business-need
    question sets vary by product and must have between 8 and 16. Question
    identity is not modeled, only the grades.
    """

    kind: EvaluationKind
    question_scores: tuple[int, ...]
    product_id: int = 0

    def __post_init__(self):
        scores = tuple(_validate_question(q) for q in self.question_scores)
        object.__setattr__(self, "question_scores", scores)
        n = len(scores)
        if self.kind is EvaluationKind.CUSTOMER_SERVICE:
            if n != CUSTOMER_SERVICE_QUESTIONS:
                raise ScoringError(
                    f"customer-service evaluations have exactly "
                    f"{CUSTOMER_SERVICE_QUESTIONS} questions, got {n}"
                )
        else:
            lo, hi = BUSINESS_NEED_QUESTIONS
            if not lo <= n <= hi:
                raise ScoringError(
                    f"business-need evaluations have {lo}..{hi} questions, got {n}"
                )

    @property
    def applicable_scores(self) -> tuple[int, ...]:
        return tuple(q for q in self.question_scores if q != 0)


@dataclass(frozen=True)
class MonthlyScore:
    """Pooled monthly score: exact rational value and the pooled count."""

    value: Fraction
    applicable_count: int

    def display(self) -> str:
        return format_score(self.value)


@dataclass(frozen=True)
class PerformanceCategory:
    label: Category
    met_sub: MetSub | None = None

    @property
    def key(self) -> str:
        """Canonical label key, e.g. "met_some" or "met_1"."""
        if self.label is Category.MET and self.met_sub is not None:
            return "met_1" if self.met_sub is MetSub.MET_1 else "met_2"
        return CATEGORY_KEYS[self.label]

    @property
    def display(self) -> str:
        return CATEGORY_DISPLAY[self.key]


def _as_fraction(score) -> Fraction:
    if isinstance(score, Fraction):
        return score
    if isinstance(score, Decimal):
        return Fraction(score)
    if isinstance(score, Rational):
        return Fraction(score.numerator, score.denominator)
    if isinstance(score, float):
        return Fraction(score)
    if isinstance(score, int):
        return Fraction(score)
    raise TypeError(f"cannot interpret {score!r} as a score")


def call_score(evaluation: CallEvaluation) -> Fraction:
    """Score one call: sum of applicable grades over their count, exact.

    Raises AllQuestionsNotApplicable when every grade is 0.
    """
    applicable = evaluation.applicable_scores
    if not applicable:
        raise AllQuestionsNotApplicable("no applicable questions on this call")
    return Fraction(sum(applicable), len(applicable))


def monthly_score(calls: Sequence[CallEvaluation]) -> MonthlyScore:
    """Pool all applicable grades of the month's calls into one score.

    All calls must share one evaluation kind. The result is the pooled sum
    divided by the pooled applicable count, not the mean of call scores.
    A month is normally scored from six calls; other counts are accepted
    with an UnexpectedCallCountWarning.
    """
    calls = list(calls)
    if not calls:
        raise AllQuestionsNotApplicable("no calls supplied")
    kinds = {c.kind for c in calls}
    if len(kinds) > 1:
        raise MixedEvaluationKinds(
            f"cannot pool {sorted(k.value for k in kinds)} into one monthly score"
        )
    if len(calls) != EXPECTED_CALLS_PER_MONTH:
        warnings.warn(
            f"monthly score pooled from {len(calls)} calls, expected "
            f"{EXPECTED_CALLS_PER_MONTH}",
            UnexpectedCallCountWarning,
            stacklevel=2,
        )
    total = 0
    count = 0
    for c in calls:
        applicable = c.applicable_scores
        total += sum(applicable)
        count += len(applicable)
    if count == 0:
        raise AllQuestionsNotApplicable("no applicable questions in any call")
    return MonthlyScore(value=Fraction(total, count), applicable_count=count)


def categorize(score, split_met: bool = False) -> PerformanceCategory:
    """Map a score in [1, 5] onto its performance category.

    Boundary values land in the upper interval (a 3.0 is met, a 4.75 is
    far exceeded). With split_met, met is subdivided at 3.5 with the same
    boundary rule (an exact 3.5 is met 2).
    """
    s = _as_fraction(score)
    if not _SCORE_MIN <= s <= _SCORE_MAX:
        raise ScoreOutOfRange(f"score {score!r} outside [1, 5]")
    if s < _MET_SOME_LO:
        return PerformanceCategory(Category.NOT_MET)
    if s < _MET_LO:
        return PerformanceCategory(Category.MET_SOME)
    if s < _EXCEEDED_LO:
        if not split_met:
            return PerformanceCategory(Category.MET)
        sub = MetSub.MET_1 if s < _MET_SPLIT else MetSub.MET_2
        return PerformanceCategory(Category.MET, met_sub=sub)
    if s < _FAR_EXCEEDED_LO:
        return PerformanceCategory(Category.EXCEEDED)
    return PerformanceCategory(Category.FAR_EXCEEDED)


def format_score(score, places: int = 2) -> str:
    """Display form of a score: half-up rounding, fixed decimals (2.67)."""
    s = _as_fraction(score)
    quantum = Decimal(1).scaleb(-places)
    d = Decimal(s.numerator) / Decimal(s.denominator)
    return str(d.quantize(quantum, rounding=ROUND_HALF_UP))


def format_percent(numerator: int, denominator: int, places: int = 2) -> str:
    """Exact half-up percentage display for a count ratio (60.29)."""
    if denominator == 0:
        return format_score(Fraction(0), places)
    return format_score(Fraction(100 * numerator, denominator), places)
