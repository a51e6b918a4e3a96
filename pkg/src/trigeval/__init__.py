"""Trigger-aware evaluation of A/B experiments.

Three estimators of the average treatment effect are provided: a baseline
difference in means, an OLS fit using each unit's exact trigger intensity, and
the same fit using intensities estimated from a sample of ``m`` observations,
together with the bias and variance bounds of the sampled variant and a Monte
Carlo harness to check them.
"""

__version__ = "0.1.0"

from .errors import (DegenerateDesign, DuplicateUnit, InsufficientData, InsufficientObservations,
                     InvalidInput, InvalidMoments, MissingAssignment, MissingTriggerData,
                     NoTriggers, ParseError, SchemaError, TrigevalError)
from .estimators import (FitResult, Method, MomentSet, closed_form_inverse_2x2,
                         closed_form_inverse_3x3, fit, fit_baseline, fit_full_knowledge,
                         fit_partial_knowledge, predicted_partial_residual_variance,
                         residual_variance)
from .kernels import BACKEND
from .model import (Assignment, CountLaw, Dataset, GenConfig, ModelParams, NoiseSpec,
                    ObservationRecord, TriggerLaw, UnitRecord, aggregate_to_units,
                    assign_randomly, generate_dataset, generate_observations)
from .sampling import (EpsilonMoments, SamplingMode, SamplingPlan, ate_bias_bound,
                       epsilon_moments, estimate_intensities, estimate_trigger_intensity,
                       exact_ate_bias, sample_dataset_intensities, variance_gap_bound,
                       variance_ratio)
from .sim import FigureTarget, SweepAxis, SweepConfig, SweepReport, emit_figure_data, run_sweep
