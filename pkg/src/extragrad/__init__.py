"""Same-sample stochastic extragradient solvers, exact bilinear rate formulas,
and a theorem-by-theorem numerical verification harness."""

from .problems import (
    BallIndicatorProx,
    BilinearSaddle,
    BoxIndicatorProx,
    FiniteSumOperator,
    L1Prox,
    ProxFunction,
    SquaredL2Prox,
    VIProblem,
    ZeroProx,
    finite_sum_bilinear,
    power_iteration_sigma_max,
    saddle_to_vi,
    strongly_monotone_problem,
)
from .solvers import (
    IterState,
    Method,
    MethodConfig,
    NonconvexRunRecord,
    QuadraticObjective,
    QuarticObjective,
    RunRecord,
    StochasticObjective,
    fit_contraction_factor,
    implicit_step,
    kstep_eg_step,
    momentum_eg_step,
    nonconvex_eg_run,
    run,
    seg_independent_step,
    seg_same_step,
    sgda_step,
)
from .spectral import (
    HeatmapGrid,
    MomentumBlock,
    SpectralReport,
    corollary_stepsizes,
    default_heatmap_grid,
    eg_contraction_factor,
    heatmap_grid,
    momentum_block,
    spectral_radius,
)
from .verify import (
    GapEstimate,
    TheoremCheckReport,
    restricted_gap,
    run_suite,
)

__version__ = "0.1.0"
