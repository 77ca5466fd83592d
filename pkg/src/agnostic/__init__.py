"""Assumption-lean inference for regression after variable selection."""

from .conformal import (GridSpec, PredictorSpec, choose_lambda_by_length, conformal_interval,
                        conformal_pvalue, variable_effect_lengths)
from .data import Dataset, SplitPair, load_csv, split, standardize
from .harness import (HarnessConfig, IntervalReport, median_risk_interval, projected_params,
                      risk_inflation, risk_interval, run_harness)
from .riskbound import BoundInputs, excess_risk_bound, verify_bound
from .selectors import (SelectedModel, SelectorSpec, forward_stepwise, lasso_constrained,
                        lasso_path, select)

__version__ = "0.1.0"
