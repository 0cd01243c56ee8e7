from surplus_sharing.allocation import (
    PremiumVector,
    WorstCaseMeasure,
    fair_premia,
    marginal_premium,
    total_premium,
    upper_premia,
    worst_case_measure,
)
from surplus_sharing.coherent import (
    CoherentUtility,
    ScenarioSet,
    acceptable_shift,
    choquet_utility,
    dual_distortion,
    is_acceptable,
    parse_distortion,
    scenario_utility,
    utility_dominates,
    validate_distortion,
)
from surplus_sharing.models import (
    ModelReport,
    Portfolio,
    capital_sweep,
    model1_run,
    model2_run,
    model3_run,
    model4_run,
    run_model,
)
from surplus_sharing.prob_core import (
    Measure,
    ProbSpace,
    RandomVar,
    comonotone_order,
    expectation,
    is_comonotonic,
    survival,
)
from surplus_sharing.queues import RunQueue
from surplus_sharing.retention import (
    RetentionProblem,
    RetentionSolution,
    phi_eval,
    solve_retention,
)
import surplus_sharing.tasks as tasks
from surplus_sharing.types import *
from surplus_sharing.utils import *
