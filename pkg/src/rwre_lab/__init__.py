"""Numerical laboratory for random walk in random environment on trees
whose level sizes grow like exp(beta n + c n^(1/3)).

The package probes the recurrence/transience boundary through the
electrical-network reduction: seeded environments on lazily generated
trees, bottleneck and effective-conductance statistics, confinement
("tube") probabilities with exact DP and rare-event splitting estimators,
boundary capacity in general gauges, and the explicit critical constants.
"""

from .capacity import Gauge, dimension_estimate, finite_capacity, \
    spherical_capacity_series
from .criticality import (
    CriticalReport,
    c1_critical,
    c2_constant,
    critical_report,
    default_min_level,
    ld_bounds,
    ratio_harnack,
    second_moment_bound,
    small_prob_experiment,
    survivor_count,
)
from .distributions import (
    EnvDistribution,
    Gaussian,
    Lattice,
    PushProfile,
    Tabulated,
    mgf,
    pm_one,
    push_profile,
    sample,
    tilt,
)
from .environment import (
    EnvSample,
    bottleneck_and_conductance,
    bottleneck_stat,
    effective_conductance,
    root_conductance,
)
from .errors import BudgetError, ConfigError, ExtinctionError
from .trees import Tree, TreeSpec, growth_count, level_degrees, meet
from .tubes import (
    TubeSpec,
    brownian_confinement,
    cuberoot_rate_experiment,
    theoretical_tube_rate,
    tube_prob_exact_lattice,
    tube_prob_mc,
)
from .walk import (
    WalkState,
    escape_probability_mc,
    escape_probability_network,
    simulate_walk,
    transition_probs,
)

__version__ = "0.1.0"
