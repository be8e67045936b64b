"""Kernel of the quadratic interaction and its canonical decomposition."""

from .expsum import ExponentialSum
from .elementary import (CubicCoefficients, d_full, d_tensor, elementary_kernel,
                         factor, factor_coeffs, full_kernel, kernel_from_tensor,
                         t_profiles)
from .canonical import (CanonicalFit, DegenerateSamplingError, canonical_H,
                        fit_canonical, resonance_lambda)
from .table import (KernelTable, TableMemoryError, band_grid, build_kernel_table,
                    export_csv, load_table, material_hash, save_table)
from .verify import (bound_constant, bound_ratio, canonical_fit_check, log_uniform_triples,
                     reduction_residuals, resonance_samples)
