"""Linear stability of rotating MHD flows with a vertical magnetic field.

Axisymmetric perturbations of the steady state u = r*omega(r) e_theta,
B = eps*b(r) e_z on an annulus [r1, r2] decompose into axial Fourier modes
k.  Each mode is governed by the weighted Sturm-Liouville form

    <L_k phi, phi> = int (1/r)|phi'|^2 + (k^2/r)|phi|^2 + F(r) r |phi|^2 dr,

with F = d(omega^2)/dr / (eps^2 b^2 r) + b''/(r^2 b) - b'/(r^3 b).  The flow is
linearly stable iff L_1 >= 0, and the number of unstable modes is twice the
sum over k >= 1 of the negative index of L_k.
"""

from .errors import (InvalidProfile, WrongRegime, NumericFailure, IncompleteCount,
                     ConfigError)
from .profiles import (RadialProfile, FieldShape, make_keplerian, make_powerlaw,
                       make_twoterm, make_tabulated, make_analytic, uniform_field,
                       gaussian_field, eval_F, eval_rayleigh, check_signs)
from .operators import (RadialGrid, TridiagonalForm, Inertia, make_grid,
                        assemble_Lk, assemble_Lhat, inertia, unstable_mode_count,
                        eigen_extremes)
from .thresholds import (StabilityVerdict, Threshold, classify, compute_B0,
                         compute_eps_min, compute_eps_max, kernel_perturbation_sign)
from .dispersion import DispersionInput, dispersion_roots, asymptotic_roots
from .modes import ModeSolution, find_growth_rate, max_growth_rate, escape_time
from .linsim import (MHDGenerator, EulerGenerator, assemble_generator, generator_spectrum,
                     quadratic_form, run_simulation, project_divfree)
from .euler import (EulerReport, rayleigh_classify, euler_a1, euler_lambda_k,
                    assemble_euler_generator, compare_small_field)

__version__ = "0.1.0"
