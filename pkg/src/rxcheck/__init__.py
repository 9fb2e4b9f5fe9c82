"""rxcheck: a refinement typechecker for UI-thread safety of stream pipelines.

The checker refines methods and callbacks with effect qualifiers and streams
and schedulers with thread qualifiers, then verifies that UI-effectful
callbacks are only ever attached to UI-threaded streams. An executable
dynamic semantics (the oracle) backs the checker with exhaustive soundness
fuzzing.
"""

from .checker import (
    Checker,
    TypeEnv,
    UnknownInterface,
    check_call_effect,
    check_override,
    check_program,
    check_subscribe,
    infer_lambda_effect,
    type_chain,
)
from .diagnostics import CODES, Diagnostic, Span, sort_diagnostics
from .frontend import (
    ParseResult,
    ResolvedProgram,
    StubParseResult,
    parse_program,
    parse_stub_file,
    pretty,
    resolve_annotations,
)
from .oracle import (
    OracleUnsupported,
    PipelineIR,
    Resolution,
    RtThread,
    SoundAccept,
    SoundReject,
    SourceThread,
    Stage,
    Trace,
    Unsound,
    check_soundness,
    enumerate_programs,
    enumerate_resolutions,
    lower,
    run,
    run_soundness_fuzz,
)
from .qualifiers import (
    EffectQual,
    PolyBinding,
    ThreadQual,
    UnboundPolyQualifier,
    effect_join,
    effect_leq,
    instantiate,
    thread_join,
    thread_leq,
)
from .stubs import MethodSig, StubConflict, StubEnv, builtin_env, empty_env, merge

__version__ = "0.1.0"

__all__ = [
    "Checker",
    "TypeEnv",
    "UnknownInterface",
    "check_call_effect",
    "check_override",
    "check_program",
    "check_subscribe",
    "infer_lambda_effect",
    "type_chain",
    "CODES",
    "Diagnostic",
    "Span",
    "sort_diagnostics",
    "ParseResult",
    "ResolvedProgram",
    "StubParseResult",
    "parse_program",
    "parse_stub_file",
    "pretty",
    "resolve_annotations",
    "OracleUnsupported",
    "PipelineIR",
    "Resolution",
    "RtThread",
    "SoundAccept",
    "SoundReject",
    "SourceThread",
    "Stage",
    "Trace",
    "Unsound",
    "check_soundness",
    "enumerate_programs",
    "enumerate_resolutions",
    "lower",
    "run",
    "run_soundness_fuzz",
    "EffectQual",
    "PolyBinding",
    "ThreadQual",
    "UnboundPolyQualifier",
    "effect_join",
    "effect_leq",
    "instantiate",
    "thread_join",
    "thread_leq",
    "MethodSig",
    "StubConflict",
    "StubEnv",
    "builtin_env",
    "empty_env",
    "merge",
    "__version__",
]
