"""Simulation of quantized detector networks.

Registers of detector qubits, sparse labstates, stage-by-stage evolution
through creation-operator rewrite rules, and Born-rule outcome tables.
"""

from .errors import *  # noqa: F401,F403
from .experiments import (
    EprSettings,
    SlitGeometry,
    balanced_beamsplitter_stage,
    beamsplitter_stage,
    double_slit_closed_form,
    epr_network,
    hsz_network,
    phase_shifter_stage,
    product_network,
    pvm_network,
    slit_network,
    stern_gerlach,
)
from .netdef import (
    NetDefDocument,
    compile_netdef,
    emit_results,
    parse_netdef,
    serialize_netdef,
    to_document,
)
from .paths import effective_povm, path_amplitude_enumerate, path_amplitude_propagate
from .register import (
    Labstate,
    ProbabilityTable,
    RegisterSpec,
    apply_creation,
    born_probability,
    encode_monomial,
    inner_product,
    rank_subset,
    void_state,
)
from .stages import (
    NetworkProgram,
    RewriteRule,
    StageMap,
    ValidationReport,
    evolve,
    random_semi_unitary,
    run_program,
    validate_program,
    validate_stage,
)

__version__ = "0.1.0"
