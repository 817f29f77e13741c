from failsafe_nr.montecarlo.goodness_of_fit import HistogramData, KsReport, histogram, ks_report, ks_statistic, overlay_curve
from failsafe_nr.montecarlo.simulate import SimulationBatch, rejection_rate, simulate_half_normal_sums, simulate_nr
