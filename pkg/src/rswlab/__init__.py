"""rswlab: a simulation and verification lab for box-crossing phenomena in
planar site percolation without positive association.

Sign fields (Bernoulli, Gaussian with pluggable kernels, antiferromagnetic
Ising via depth-truncated backward sampling, coarse-grained mixtures) on a
symmetric triangulation of Z^2, exact discrete-topology crossing detectors,
Monte Carlo estimators for crossing/circuit/gluing probabilities and
coupling distances, and log-scale evaluators for the quantitative bounds
tying them together.
"""

from .lattice import Annulus, Box, LatticeSpec, UNION_JACK, get_lattice
from .topology import (
    Configuration,
    Quad,
    annulus_slit_quad,
    crossing_exists,
    find_crossing,
    is_glued,
    jordan_split,
    l_quad,
    leftmost_crossing,
    loop_erase,
    quad_in_class,
    rect_quad,
    subquad_in_annulus,
    surrounds_annulus,
    tubular_frontier,
)
from .kernels import (
    Kernel,
    bessel_j0,
    iid_kernel,
    interpolate_kernel,
    j0_kernel,
    kernel_eval,
    power_decay_kernel,
    smoothed_wave_kernel,
)
from .gaussian import (
    CouplingReport,
    GaussianModel,
    gaussian_sample,
    shifted_truncation,
    truncation_coupling,
)
from .ising import (
    IsingModel,
    ising_cftp_sample,
    ising_conditional_prob,
    ising_exact_gibbs,
    ising_q,
)
from .samplers import (
    BernoulliSampler,
    CoarseSampler,
    GaussianSampler,
    IsingSampler,
    coarse_mixture_sample,
    sample_bernoulli,
)
from .estimators import (
    ExplorationRecipe,
    MCEstimate,
    QuadFamily,
    TruncatedGaussianSampler,
    check_rect_to_l,
    estimate_beta,
    estimate_m,
    estimate_pi,
    estimate_psi,
    estimate_theta,
)
from .bounds import (
    BootstrapConstants,
    LogScaleValue,
    bootstrap_constants,
    decorrelation_bound,
    rho_sequence,
    rsw_bound,
)

__version__ = "0.1.0"
