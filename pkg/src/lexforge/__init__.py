"""lexforge: deterministic corpus construction and post-training
orchestration toolkit for legal language models."""

__version__ = "0.1.0"

from .corpus import (Document, CorpusManifest, ManifestEntry, InstructionSample,
                     PreferencePair, count_tokens, validate_manifest,
                     compute_ratios, read_documents, write_documents)
from .filtering import FilterRuleSet, FilterVerdict, apply_filters, filter_corpus
from .scoring import (build_scoring_prompt, parse_score_response, score_corpus,
                      scorer_agreement, threshold_filter)
from .mixing import (SamplingPlan, RatioTargets, plan_sampling, check_ratios,
                     execute_sampling, check_post_training_mix)
from .packing import (StagePlan, PackingPlan, LrSchedule, make_stage_plan,
                      pack_documents, step_batches, warmup_lr)
from .curriculum import (CurriculumConfig, BatchComposition, stage1_batches,
                         stage2_batches, mixing_stats)
from .hipo import (LogProbQuad, HipoConfig, HipoState, EvalOutcome,
                   dpo_loss, hipo_loss, mine_hard_samples,
                   build_preference_pairs, advance_iteration)
from .metrics import MetricKind, accuracy, f_beta, macro_f1, rouge_l, soft_f1, rc_f1, nld
from .pipeline import run_pipeline, validate_config
