"""Digital memcomputing solver for 3-SAT, CDC instance generator and scaling benchmarks."""

from .cnf import Formula, Literal, parse_dimacs, serialize_dimacs, verify
from .dynamics import SolverParams, SolverState, flow_field
from .gen import CdcParams, PlantedInstance, cdc_probabilities, generate_cdc, generate_uniform
from .integrator import RunConfig, RunRecord, solve

__all__ = [
    "CdcParams",
    "Formula",
    "Literal",
    "PlantedInstance",
    "RunConfig",
    "RunRecord",
    "SolverParams",
    "SolverState",
    "cdc_probabilities",
    "flow_field",
    "generate_cdc",
    "generate_uniform",
    "parse_dimacs",
    "serialize_dimacs",
    "solve",
    "verify",
]
