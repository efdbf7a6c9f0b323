"""chronoqa: build, solve, and score time-sensitive QA datasets.

The toolkit turns time-scoped knowledge-base facts into three levels of
temporal questions (time-time, time-event, event-event), renders prompts for
closed-book / open-book / structured-facts settings, answers any generated
question with a symbolic solver, and scores predictions with exact match,
token F1, year error metrics, and a temporally-aware reward.
"""

__version__ = "0.1.0"

from .contexts import AnnotatedDocument, RenderedExample, mask_spans, render, unmask
from .facts import Fact, FactGroup, FactStore, build_groups, ingest, load_fact_file, split_subjects
from .oracle import OracleAnswer, solve, solve_l1, solve_l2, solve_l3
from .questions import Question, gen_l1, gen_l1_future, gen_l2, gen_l3, l2_question_at
from .scoring import (
    EvalReport,
    Prediction,
    RewardRecord,
    evaluate,
    normalize,
    reward,
    score_em,
    score_f1,
    score_numeric,
)
from .templates import TemplateTable, load_templates
from .timeline import Offset, TimeInterval, TimePoint, compare, format_time, parse_time, shift

__all__ = [
    "__version__",
    "AnnotatedDocument", "RenderedExample", "mask_spans", "render", "unmask",
    "Fact", "FactGroup", "FactStore", "build_groups", "ingest", "load_fact_file", "split_subjects",
    "OracleAnswer", "solve", "solve_l1", "solve_l2", "solve_l3",
    "Question", "gen_l1", "gen_l1_future", "gen_l2", "gen_l3", "l2_question_at",
    "EvalReport", "Prediction", "RewardRecord", "evaluate", "normalize",
    "reward", "score_em", "score_f1", "score_numeric",
    "TemplateTable", "load_templates",
    "Offset", "TimeInterval", "TimePoint", "compare", "format_time", "parse_time", "shift",
]
