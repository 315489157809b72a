"""Probabilistic knowledge bases under the maximum-entropy principle.

Rules are desired conditional probabilities over discrete variables.
Compilation builds a hypertree of local marginal tables and iterates
single-rule minimum-relative-entropy updates until every rule holds;
the result supports queries, hypothetical reasoning, sampling, and
sample-driven adaptation, locally on the factored representation.
"""

from .errors import (
    CapacityError,
    ImpossibleEvidenceError,
    InfeasibleHypotheticalsError,
    InfeasibleRuleError,
    InternalError,
    KbError,
    KindError,
    OutOfRangeError,
    ParseError,
    PropagationSupportError,
    ResolutionError,
    SchemaError,
    StateError,
    UndefinedConditionalError,
)
from .model import (
    Atom,
    Comparator,
    JointTable,
    Kind,
    Mode,
    Rule,
    Sentence,
    TAUT,
    Variable,
    boolean,
    nominal,
    ordinal,
)
from .parser import KnowledgeBaseSource, SolverOptions, format_kb, parse_fact, parse_kb, parse_rule
from .hypertree import Hypertree, build_from_rules
from .engine import CliqueTable, FactoredDistribution, oracle_project
from .maxent import SolveReport, absolute_entropy, relative_entropy, solve
from .query import QueryResult, QuerySpec, complex_query, instantiate, marginals
from .learning import Sample, alpha_learn, draw_sample
from .shell import CompiledKb, compile_kb, load_compiled, run_query_script

__version__ = "0.1.0"

__all__ = [
    "KbError", "SchemaError", "CapacityError", "KindError", "OutOfRangeError",
    "ParseError", "ResolutionError", "StateError", "InternalError",
    "UndefinedConditionalError", "InfeasibleRuleError", "PropagationSupportError",
    "ImpossibleEvidenceError", "InfeasibleHypotheticalsError",
    "Variable", "Kind", "boolean", "nominal", "ordinal",
    "Sentence", "Atom", "Comparator", "TAUT", "Mode", "Rule", "JointTable",
    "KnowledgeBaseSource", "SolverOptions", "parse_fact", "parse_rule",
    "parse_kb", "format_kb",
    "Hypertree", "build_from_rules",
    "CliqueTable", "FactoredDistribution", "oracle_project",
    "SolveReport", "solve", "absolute_entropy", "relative_entropy",
    "QuerySpec", "QueryResult", "complex_query", "instantiate", "marginals",
    "Sample", "draw_sample", "alpha_learn",
    "CompiledKb", "compile_kb", "load_compiled", "run_query_script",
    "__version__",
]
