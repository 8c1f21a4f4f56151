"""Counting, moments, singularity analysis and uniform sampling of closed
De Bruijn terms with a bounded index or a bounded number of levels."""

from .asymptotics import (DegenerateBound, NoRootInRange, RadicandSystem, SingularityReport,
                          Unsupported, asymptotic_count, classify_bound, eval_radicands,
                          find_dominant_singularity, growth_constant, index_constants,
                          level_constants, log_asymptotic_count, singularity_report, u_N_sequences)
from .oracle import enumerate_terms, in_family, oracle_histogram
from .profile import (ProfileReport, lambda_sequence, large_k_level_constant, level_mean,
                      limit_constant_D, predicted_regime, profile_report)
from .sampler import SampleBatchStats, Sampler, sample_batch_stats, sample_term, sample_terms
from .series import (CapExceeded, EmptySize, ExactMoments, Family, FamilySpec, InvalidMark, Mark,
                     MomentTable, NO_MARK, TOTAL_LEAVES, build_moment_tables, count_closed,
                     count_row, distribution, exact_moments, exact_shape)
from .terms import (Abs, App, LambdaDag, NotClosed, ParseError, Var, from_json, level_histogram,
                    parse_debruijn, render_debruijn, term_stats, to_json, to_lambda_dag)

__version__ = "0.1.0"
