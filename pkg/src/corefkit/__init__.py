"""Coreference toolkit: CoNLL-U with Entity annotations, the one-line
plaintext format, mention alignment and the usual coreference scores."""

from .align import MatchStrategy, MentionAlignment, ZeroAlignment, align_documents, align_mentions, align_zeros
from .conllu import Document, Node, NodeId, Sentence, parse_conllu, read_conllu, validate, write_conllu
from .harness import (
    DatasetResult,
    corpus_stats,
    format_stats,
    leaderboard,
    macro_average,
    sample_mini,
    score_dataset,
    upos_factorized_score,
)
from .mentions import (
    CorefDoc,
    Entity,
    Mention,
    build_corefdoc,
    classify_mention,
    compute_head,
    extract_entities,
    filter_singletons,
)
from .metrics import PRF, MetricReport, b_cubed, blanc, ceaf_e, conll_f1, evaluate, lea, mor, muc
from .textcoref import clean, deserialize, serialize

__version__ = "0.1.0"
