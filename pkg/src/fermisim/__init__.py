"""fermisim: sector-compressed statevector simulation of fermion dynamics.

Wavefunctions live in (particle number, Sz) symmetry sectors stored as
alpha-string x beta-string coefficient matrices.  The package provides
exact and series time-evolution routines, dense-operator application
kernels, reduced density matrices, and a brute-force dense oracle used
for verification.
"""

from .apply import (apply_dense, apply_dense_hz, apply_dense_kh,
                    apply_dense_olsen, apply_dense_sso, apply_hamiltonian,
                    apply_term, build_d_intermediate, build_f_intermediate,
                    select_dense_kernel)
from .errors import (ConvergenceError, DomainError, FermisimError, FormatError,
                     NumericError, ResourceError)
from .evolve import (LuFactors, SeriesControl, SpectralWindow,
                     apply_column_operator, default_window, evolve,
                     evolve_chebyshev, evolve_diagonal_coulomb,
                     evolve_excitation, evolve_quadratic, evolve_sparse,
                     evolve_taylor, lu_column_pivot, set_worker_threads)
from .graph import FciGraph, FciGraphSet, get_fci_graph, sector_shape
from .bitstrings import lexical_index, strings_of
from .operators import (DiagonalCoulomb, ExcitationTerm, LadderOp,
                        QuadraticHamiltonian, RestrictedHamiltonian,
                        SSOHamiltonian, SparseHamiltonian, classify,
                        load_fcidump, parse_operator_string, print_operator,
                        restricted_from_chemists)
from .rdm import RdmTensor, compute_rdm, expectation, hole_rdm, two_body_gradient
from .tensorio import read_tensor, write_tensor
from .verification import run_verification
from .wavefunction import SectorKey, Sector, Wavefunction, create, inner_product

__version__ = "0.1.0"
