"""Dynamics of quasi-periodic SL(2,R) Schrodinger cocycles with peaky
potentials: Lyapunov exponents (real and complexified), fibered rotation
numbers, trace closed forms, ellipticity/regularity classification,
Diophantine arithmetic and finite-order reducibility normal forms.
"""

from .arithmetic import (DiophantineCert, Frequency, UnsupportedClassError,
                         convergents, dc1_membership, dpq_measure_estimate,
                         dpq_membership, ds_membership)
from .classify import (EigenBranch, EllipticityReport, RegularityViolation,
                       eigen_branch, ellipticity_report, regularity_check,
                       schrodinger_qstep_loop)
from .cocycle import (PreconditionError, ScaledProduct, q_step, q_step_grid,
                      rotation, scaled_transfer, trace_closed_form,
                      transfer_product)
from .lyapunov import (LEEstimate, LyapunovProfile, UHCertificate,
                       herman_lower_bound, le_estimate, le_profile, uh_test)
from .potentials import (ParameterError, Potential, StripViolationError,
                         make_peaky_bump, make_poisson_peak, make_zero,
                         pole_data)
from .reduction import (EllipticLoopForm, MarginError, NumericalFailureError,
                        ReductionResult, ReductionState, ResonanceError,
                        cheap_trick_reduce, cheap_trick_step,
                        cohomological_solve, elliptic_loop_diagonalize,
                        periodic_normal_form, schrodinger_one_step_loop)
from .rotation import (ConsistencyError, RotationEstimate, density_of_states,
                       elliptic_rotation_integral, rotation_number)
from .scan import (ScanResult, WindowReport, find_windows, locate_spectrum,
                   run_scan, scan_csv)

__version__ = "0.1.0"
