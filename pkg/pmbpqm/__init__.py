"""Paired-measurement belief propagation with quantum messages for BSCQ channels."""

__version__ = "0.1.0"

from pmbpqm.channel import (  # noqa: E402
    GeneralBSCQ,
    QubitBSCQ,
    canonicalize,
    from_flip_family,
    helstrom_qubit,
    helstrom_success,
    holevo,
    psc,
)
from pmbpqm.combine import (  # noqa: E402
    BranchDistribution,
    boxast,
    paired_measurement,
    pm_reduce,
    varoast,
)
from pmbpqm.decoder import (  # noqa: E402
    DecodeResult,
    Method,
    Node,
    NodeKind,
    TreeFactorGraph,
    collective_helstrom,
    decode,
    locally_greedy,
    pmbpqm_exact,
    pmbpqm_mc,
)
from pmbpqm.errors import ContractViolation, GraphError, PMBPQMError, ResourceLimitError  # noqa: E402

__all__ = [
    "__version__",
    "BranchDistribution",
    "ContractViolation",
    "DecodeResult",
    "GeneralBSCQ",
    "GraphError",
    "Method",
    "Node",
    "NodeKind",
    "PMBPQMError",
    "QubitBSCQ",
    "ResourceLimitError",
    "TreeFactorGraph",
    "boxast",
    "canonicalize",
    "collective_helstrom",
    "decode",
    "from_flip_family",
    "helstrom_qubit",
    "helstrom_success",
    "holevo",
    "locally_greedy",
    "paired_measurement",
    "pm_reduce",
    "pmbpqm_exact",
    "pmbpqm_mc",
    "psc",
    "varoast",
]
