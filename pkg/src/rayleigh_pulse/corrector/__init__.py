"""Leading profile, first corrector and solvability diagnostics."""

from .cutoff import CutoffSpec, psi, smoothstep
from .modal import ModalBand, quad_coefficients
from .profiles import (CorrectorProfiles, ProfileBuilder, SigmaProfiles, SupportError,
                       band_of, dx1_mixed, sigma_traces, unband)
from .diagnostics import (apply_cutoff, cokernel_fredholm_ratio, depth_samples, fredholm_normalized, project_x1,
                          tau_scaling_fit, tau_sup)
