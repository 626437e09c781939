"""ohmicnet: neural identification of power-law spectral densities from
exact pure-dephasing qubit trajectories."""

from .dephasing import (
    BathSpec,
    GammaProfiler,
    Observable,
    OhmicityClass,
    QuadratureNotConverged,
    QubitInit,
    SpectralParams,
    TimeGrid,
    Trajectory,
    decoherence_gamma,
    evolve_density,
    expect_sigma,
    gamma_profile,
    generate_trajectory,
    ohmicity_class,
    spectral_density,
)
from .fourier import DftCoefficients, dft_forward, dft_inverse, featurize
from .dataset import (
    LabeledDataset,
    LabeledExample,
    SamplingRegime,
    SplitSizes,
    build_dataset,
    load_dataset,
    sample_params,
    save_dataset,
)
from .network import (
    AdamState,
    Head,
    Loss,
    MlpSpec,
    ModelParams,
    TrainConfig,
    adam_step,
    backward,
    evaluate_classification,
    evaluate_regression,
    forward,
    init_params,
    loss_cross_entropy,
    loss_mse,
    train,
)

__version__ = "0.1.0"
