"""Call-center CSR performance mining.

Monthly evaluation scoring and categorization, Table-2-shaped record
handling with cleaning and per-product min-max scaling, a seeded synthetic
data generator with planted attribute effects, six from-scratch classifier
families behind one binary fit/predict contract, per-class one-vs-rest
evaluation reports, and attribute-removal sensitivity rankings.
"""

__version__ = "0.1.0"

from csrminer.scoring import (
    Category,
    MetSub,
    PerformanceCategory,
    EvaluationKind,
    CallEvaluation,
    MonthlyScore,
    call_score,
    monthly_score,
    categorize,
)

__all__ = [
    "Category",
    "MetSub",
    "PerformanceCategory",
    "EvaluationKind",
    "CallEvaluation",
    "MonthlyScore",
    "call_score",
    "monthly_score",
    "categorize",
    "__version__",
]
