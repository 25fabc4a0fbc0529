"""Forward-chaining inference over bipartite parameter/rule nets.

Typical use::

    from mivarnet import load_net, Query, solve

    net, _ = load_net("triangle.xml")
    result = solve(net, Query({"P2": 60, "P3": 60}, {"P1"}))
    result.path.ids        # ['R1']
    result.bindings["P1"]  # 60.0
"""

from .errors import (
    EvalError,
    InsufficientData,
    KbError,
    MissingData,
    MivarError,
    NetError,
    ParseError,
    QueryError,
    SchemaError,
    TraceTooLarge,
    XmlError,
)
from .expr import evaluate, free_vars, parse, to_text
from .genbench import (
    BenchRecord,
    GenSpec,
    ScalingFit,
    chain_rule_count,
    fit_scaling,
    generate_chain,
    random_net,
    run_benchmark,
    standard_query,
    write_bench_csv,
)
from .inference import (
    InferenceState,
    OpCounter,
    Query,
    Solution,
    SolutionPath,
    TieBreak,
    backward_relevance,
    evaluate_path,
    find_fireable,
    fire_rule,
    init_state,
    prune_path,
    run_inference,
    solve,
)
from .kbio import (
    KbMetadata,
    export_dot,
    load_kb,
    load_net,
    parse_kb,
    read_tsv,
    save_net,
    write_kb,
    write_tsv,
)
from .net import MivarNet, Parameter, Rule, Violation, build_net, validate_net
from .trace import CellMark, MatrixView, Trace, render_trace, trace_matrix

__version__ = "0.1.0"
