"""Viable yields, viability kernels and sustainable harvests of predator-prey fisheries."""
from .core import (
    REL_SLACK,
    ConstraintSet,
    DomainError,
    GrowthModel,
    InvalidArgumentError,
    catches,
    check_acceptable,
    step,
    successor,
)
from .estimation import FitConfig, FitResult, ObservationSeries, fit, replay, synthetic_series, wrss
from .io import __version__
from .lotka_volterra import (
    PERU_MIN_BIOMASS,
    PERU_PARAMS,
    LotkaVolterra,
    LVParams,
    lv_evy_closed_form,
    lv_growth_factors,
    lv_viability_precondition,
)
from .simulate import AuditReport, HarvestPolicy, Trajectory, audit, run, run_batch
from .viability import (
    AnalyticKernel,
    KernelGrid,
    ViableControlBox,
    analytic_kernel_membership,
    favorable_conditions,
    grid_kernel,
    is_viability_domain,
    viable_control_box,
)
from .yields import (
    Branch,
    EvyResult,
    MsyResult,
    equilibrium_catches,
    evy,
    msy_multispecies,
    msy_schaefer,
)
