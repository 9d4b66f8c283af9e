"""Point processes on the sphere and flat tori, W2 distances to the volume
form with certified brackets, and convergence-rate verification tooling."""

__version__ = "0.1.0"

from .manifold import (ManifoldDesc, sphere2, torus, equal_area_partition,
                       quadrature_target, geodesic_distance, pairwise_distance)
from .kernels import (EnsembleSpec, harmonic_sphere, harmonic_torus,
                      spherical_ensemble, gaf_zeros, jittered, iid,
                      kernel_eval, kernel_gram)
from .samplers import PointSet, sample_ensemble, EnvelopeViolation
from .transport import (W2Estimate, OTResult, solve_discrete_ot, w2_to_volume,
                        w1_packing_lower_bound)
from .statistics import (SmoothingBoundConfig, RateFit, smoothing_bound,
                         optimize_smoothing_time, eigenspace_statistic,
                         variance_exact, variance_mc, gaf_variance_bound,
                         fit_rate)
from .lattice import (p_norm, dual_basis_norm, count_ball, ball_points,
                      annulus_difference_count, gauss_circle_check)
from .spectral import (spectrum, legendre_P, jacobi_P, szego_quantities,
                       hormander_envelope)

__all__ = [
    "__version__",
    "ManifoldDesc", "sphere2", "torus", "equal_area_partition",
    "quadrature_target", "geodesic_distance", "pairwise_distance",
    "EnsembleSpec", "harmonic_sphere", "harmonic_torus", "spherical_ensemble",
    "gaf_zeros", "jittered", "iid", "kernel_eval", "kernel_gram",
    "PointSet", "sample_ensemble", "EnvelopeViolation",
    "W2Estimate", "OTResult", "solve_discrete_ot", "w2_to_volume",
    "w1_packing_lower_bound",
    "SmoothingBoundConfig", "RateFit", "smoothing_bound",
    "optimize_smoothing_time", "eigenspace_statistic", "variance_exact",
    "variance_mc", "gaf_variance_bound", "fit_rate",
    "p_norm", "dual_basis_norm", "count_ball", "ball_points",
    "annulus_difference_count", "gauss_circle_check",
    "spectrum", "legendre_P", "jacobi_P", "szego_quantities",
    "hormander_envelope",
]
