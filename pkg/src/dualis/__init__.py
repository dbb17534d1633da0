"""Finite-dimensional duality maps between quantum systems, with numerical verification."""
from .approx import ApproxDuality, compose_approx, defect
from .duality import (
    Constant,
    DualityMap,
    KramersWannier,
    StateMap,
    Table,
    apply_map,
    apply_state_map,
    compose_exact,
)
from .equivalence import PowerSumSequence, power_sums, reconstruct_spectrum
from .errors import DualisError
from .ising import IsingLattice, ThermalPoint, dual_coupling, partition_function
from .opscore import DensityState, HermitianOperator, Projector

__all__ = [
    "ApproxDuality", "Constant", "DensityState", "DualisError", "DualityMap", "HermitianOperator",
    "IsingLattice", "KramersWannier", "PowerSumSequence", "Projector", "StateMap", "Table",
    "ThermalPoint", "apply_map", "apply_state_map", "compose_approx", "compose_exact", "defect",
    "dual_coupling", "partition_function", "power_sums", "reconstruct_spectrum",
]
