"""Hash-partitioned ensemble text classification with provable
poisoning-robustness certificates.

Words are assigned to groups by a hash of the word alone, one base
classifier is trained per group, and predictions are tie-broken majority
votes. Because a trigger of k distinct words can corrupt at most k groups,
the vote margin yields exact per-input and dataset-level robustness
certificates against word-insertion and word-reordering backdoor attacks.
"""

from .attacks import AttackSpec, build_backdoored_testset, inject, poison_dataset
from .certify import (
    CertificationReport,
    CorruptionWitness,
    build_report,
    certified_size,
    individual_certified_accuracy,
    joint_certified_accuracy,
    max_certifiable_size,
    sample_partition_certify,
    verify_certificate,
)
from .corpus import (
    LabeledDataset,
    LabeledExample,
    PoisonSpec,
    build_subdatasets,
    load_dataset,
    make_certified_training_set,
    save_dataset,
)
from .ensemble import (
    EnsembleModel,
    VoteVector,
    load_ensemble,
    predict_ensemble,
    save_ensemble,
    train_ensemble,
    vote,
)
from .errors import (
    AttackInfeasibleError,
    BudgetError,
    ConfigError,
    DataError,
    HashvoteError,
)
from .learners import LearnerSpec, load_model, save_model, train
from .partition import (
    PartitionConfig,
    TextGroups,
    canonical_word_id,
    divide_text,
    divide_text_semantic,
    hash_group,
    normalize,
    normalize_word,
)
from .triggerid import TriggerIdConfig, identify_trigger_words, influence_scores

__version__ = "0.1.0"
