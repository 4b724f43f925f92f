"""Finite-model refinement workbench.

Checks output refinement, output abstraction, downward simulation,
probabilistic refinement (with a graded degree) and refinement modulo
output noise, over explicitly enumerated finite specifications.
"""

from refinery.calculus import (
    IOTransformer,
    Signature,
    converse,
    identity_transformer,
    io_signatures,
    is_output_transformer,
    make_transformer,
    pipe,
    precondition,
    signature_of,
    transformer_properties,
)
from refinery.canonical import canonical_workspace, load_golden
from refinery.core import (
    Binding,
    CheckReport,
    FiniteType,
    FunctionTable,
    ModelError,
    Operation,
    Slot,
    SlotKind,
    eval_function,
    make_finite_type,
    make_operation,
)
from refinery.dsl import ParseDiagnostic, SpecError, Workspace, parse_spec, render_spec
from refinery.noise import (
    NoiseModel,
    build_oot,
    check_absorption,
    check_noisy_refinement,
    make_noise_model,
    noise_orbit,
)
from refinery.probabilistic import (
    Distribution,
    ProbOperation,
    check_prob_refinement,
    demonic_join,
    make_prob_operation,
    mix,
    mix_sets,
    point,
    refinement_degree,
    support_lift,
)
from refinery.refinement import (
    DataType,
    RetrieveRelation,
    SearchBudgetExhausted,
    check_downward_simulation,
    check_output_abstraction,
    check_output_refinement,
    make_datatype,
    make_retrieve,
    search_output_transformer,
)

__version__ = "0.1.0"
