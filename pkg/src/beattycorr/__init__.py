"""beattycorr: correlations of multiplicative functions along Beatty
sequences and Bohr sets, with exact real-field arithmetic underneath."""

from .averaging import (
    AverageSeries,
    checkpoint_series,
    emit_csv,
    emit_csv_complex,
    log_average,
    natural_average,
)
from .beatty import (
    BeattyPartition,
    BeattySequence,
    MultiplicityCounter,
    beatty_eval,
    counter_trig_decomposition,
    multiplicity_counter,
    partition_irrational_pair,
    partition_rational_pair,
    validate_counter,
)
from .bohr import (
    BohrDecomposition,
    BohrSet,
    TrigApproximation,
    amalgamate,
    density,
    integer_relation_lattice,
    remove_rational_dependencies,
    trig_approximation,
)
from .convex import Box, HPolytope, Interval
from .correlator import (
    CorrelationReport,
    CorrelationSpec,
    KPointScaffold,
    correlate,
    kbsz_check,
    kpoint_scaffold,
    rational_limit_predict,
    verify_kpoint,
    verify_pretentious_product,
)
from .errors import *  # noqa: F401,F403
from .fileio import field_from_spec, load_bohr, save_bohr
from .multfunc import (
    DirichletCharacter,
    MultiplicativeFunction,
    SieveTable,
    characters_mod,
    coprime_indicator,
    from_real_character,
    liouville,
    liouville_sieve,
    pretentious_distance,
    pretentiousness_report,
    primes_upto,
    unit_function,
)
from .realfield import (
    ExactReal,
    NumberField,
    ceil_exact,
    eval_interval,
    field_arith,
    floor_exact,
    frac_exact,
    load_field,
    save_field,
)

__version__ = "0.1.0"
