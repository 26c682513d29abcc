"""Analytic X-ray / Radon transform toolkit with dual inversion branches."""

from .geometry import (
    Frame,
    SphereQuadrature,
    VolumeGrid,
    cube_grid,
    fibonacci_sphere,
    make_frame,
    sphere_integrate,
)
from .phantom import (
    BALL,
    GAUSSIAN,
    Phantom,
    Primitive,
    evaluate,
    gaussian_phantom,
    halfline_integral,
    line_integral,
    load_phantom,
    plane_integral,
    rasterize,
    save_phantom,
)
from .xform import (
    RadonProfile,
    XRayDatum,
    directional_derivative_xray,
    line_transform,
    radon_profile,
    xray,
    xray_numeric,
)
from .hilbert import (
    Profile1D,
    derivative,
    hilbert_pv_direct,
    hilbert_spectral,
    sample_cubic,
)
from .inversion import (
    BRANCH_CLASSICAL,
    BRANCH_RADON,
    BRANCH_XRAY,
    CLASSICAL_RADON_CONSTANT,
    RADON_BRANCH_FACTOR,
    SPHERICAL_REFERENCE_CONSTANT,
    XRAY_BRANCH_CONSTANT,
    CalibrationResult,
    Lemma9Report,
    RadonDataset,
    ReconstructionConfig,
    build_radon_dataset,
    calibrate_normalization,
    grangeat_convert,
    invert_classical_radon,
    invert_radon,
    invert_xray,
    lemma9_diagnostic,
    make_phantom_xray_data,
    read_volume,
    reconstruct_volume_classical,
    reconstruct_volume_radon,
    reconstruct_volume_xray,
    write_volume,
)

__version__ = "0.1.0"
