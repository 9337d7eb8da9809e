"""Limited-feedback precoded V-BLAST and Golden-code link simulator."""

__version__ = "0.1.0"

from .channel import ChannelRealization, NoiseSpec, noise_sigma2, sample_channel, transmit
from .codebook import (
    PrecoderCodebook,
    UnitaryFamily,
    build_codebook,
    default_family,
    dmin_for_index,
    family_u2,
    family_u2_example,
    family_u3,
    family_u_recursive,
    get_family,
    mu_metric,
    select_precoder,
)
from .errors import (
    ConfigError,
    FramingError,
    InsufficientStatisticsError,
    MappingError,
    OracleTooLargeError,
    UnsupportedModulationError,
)
from .golden import golden_encode, golden_equivalent_channel, golden_ml_decode
from .lattice import OpCount, RealLattice, brute_force_min, constrained_svp, realify, sphere_decode
from .modulation import Constellation, bits_to_vector, qam, vector_to_bits
from .sim import (
    BerRecord,
    SimConfig,
    emit_results,
    estimate_diversity,
    read_results_csv,
    run_ber,
    run_complexity,
)
