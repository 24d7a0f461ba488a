"""Hamiltonian simulation compiler: Trotter, QDrift and composite channels with cost bounds."""
from .hamiltonian import Hamiltonian, Partition, ProbPartition, WeightedPartition, load_hamiltonian
from .metrics import Superoperator, diamond_lower_bound, unitary_channel

__all__ = ["Hamiltonian", "Partition", "ProbPartition", "WeightedPartition", "Superoperator",
           "diamond_lower_bound", "load_hamiltonian", "unitary_channel"]
__version__ = "0.1.0"
