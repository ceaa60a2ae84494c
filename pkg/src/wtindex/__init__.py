"""wtindex: succinct wavelet-tree text index with binary rank/select support.

The index answers access/rank/select over byte or 16-bit symbol texts in
O(lg sigma) binary rank/select steps, supports order-preserving batched
query execution, and serializes to a single index file.
"""

from .alphabet import (
    AlphabetMap,
    Code,
    CodeTable,
    ceil_log2,
    create_codes,
    cumulative_histogram,
    encode_and_histogram,
    level_sizes,
    minimal_alphabet,
    prev_pow_two,
)
from .batch import (
    BatchRunner,
    QueryBatch,
    access_batch,
    rank_batch,
    run_batch,
    select_batch,
    sort_queries_by_symbol,
)
from .bitvec import BitArray, build_bit_array, partial_word
from .errors import (
    BadMagicError,
    BadVersionError,
    BatchError,
    BuildError,
    CorruptIndexError,
    Error,
    IndexFileError,
    OrdinalError,
    PositionError,
    SymbolError,
    TruncatedError,
)
from .rankselect import (
    RankSelectIndex,
    RankSelectParams,
    build_index,
    select_in_word,
)
from .wtree import (
    WaveletTree,
    construct,
    construct_with_alphabet,
    fill_level,
    load,
    save,
    stable_sort_by_prefix,
)

__version__ = "0.1.0"

__all__ = [
    "AlphabetMap", "BadMagicError", "BadVersionError", "BatchError",
    "BatchRunner", "BitArray", "BuildError", "Code", "CodeTable",
    "CorruptIndexError", "Error", "IndexFileError", "OrdinalError",
    "PositionError", "QueryBatch", "RankSelectIndex", "RankSelectParams",
    "SymbolError", "TruncatedError", "WaveletTree", "access_batch",
    "build_bit_array", "build_index", "ceil_log2", "construct",
    "construct_with_alphabet", "create_codes", "cumulative_histogram",
    "encode_and_histogram", "fill_level", "level_sizes", "load",
    "minimal_alphabet", "partial_word", "prev_pow_two", "rank_batch",
    "run_batch", "save", "select_batch", "select_in_word",
    "sort_queries_by_symbol", "stable_sort_by_prefix",
]
