"""pwkit: bandlimited (Paley-Wiener) functions under affine and non-affine warps."""

__version__ = "0.1.0"

from pwkit.pwcore import (  # noqa: E402
    BandSupport,
    PWSignal,
    SpectralDensity,
    eval_pw,
    eval_pw_complex_on_line,
    eval_pw_with_error,
    identity_residual,
    make_catalog,
    sinc_safe,
)
from pwkit.maps import AffineMap, CoordinatePower, CoordinateSine, Compose, affine, chain  # noqa: E402
from pwkit.affine import (  # noqa: E402
    complete_to_invertible,
    compose_affine,
    kernel_basis,
    project_spectrum,
    spectral_transform_invertible,
)
from pwkit.spectra import (  # noqa: E402
    SampleGrid,
    bandwidth_estimate,
    decay_sup,
    dft_spectrum,
    oob_energy,
    sample_on_grid,
)
from pwkit.analysis import (  # noqa: E402
    LineProbe,
    affinity_verdict,
    exp_type_bound_check,
    kernel_invariance_check,
    nonaffine_spread,
    random_line_probes,
    warp_phase_profile,
)
