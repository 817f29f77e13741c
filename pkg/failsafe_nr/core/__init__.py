from failsafe_nr.core.estimator import FailSafeReport, StudySet, fail_safe_n, stouffer_z
from failsafe_nr.core.nr_distribution import (
    NrDistribution,
    NrMoments,
    SumDistributionParams,
    nr_cdf,
    nr_cf,
    nr_moments,
    nr_pdf,
    nr_pdf_asymptotic,
    nr_quantile,
    nr_support,
    sum_params,
)
