"""System-level simulator and resource manager for semantic-aware RANs."""

from ._version import __version__
from .allocator import (AllocationDecision, STRATEGY_IDS, STRATEGY_KB_AWARE,
                        STRATEGY_MAXSINR_EVEN, STRATEGY_MAXSINR_WF,
                        STRATEGY_ORACLE, allocate_kb_aware,
                        allocate_maxsinr_even, allocate_maxsinr_waterfill,
                        associate_max_sinr, bandwidth_even, bandwidth_waterfill,
                        marginal_utility, oracle_exhaustive)
from .channel import (LinkState, bit_rate, e2e_bit_rate, e2e_compose,
                      interference_at, link_gain, path_loss_db, sinr)
from .config import SimConfig, default_config, load_config, validate_config
from .errors import (ConfigError, ConservationError, ConvergenceError,
                     DomainError, RangeError, SizeError, SranError, StateError)
from .kbsync import (SyncSession, SyncState, complete_transfer, decide_update,
                     exchange_versions)
from .model import (BaseStationNode, Direction, KnowledgeProfile, Mode,
                    NetworkSnapshot, PairKind, TerminalDevice, TrafficPair,
                    pair_matching_degree)
from .semantics import (MetricReport, PairEvaluation, message_length,
                        message_rate, select_mode, semantic_accuracy,
                        system_metrics)
from .simkit import (SweepSpec, SweepTable, generate_drop, run_drop, run_sweep,
                     write_csv)
