"""Bit-exact codecs and sequential file management for partition data."""
from .files import (IO_STATS, ChunkWriter, IOStats, PartitionFileSet, PartitionMeta, SeqFile,
                    detect_compression, iter_raw, read_meta, write_meta)
from .framing import frame_compress, frame_decompress
from .partition import (BRANCH_DTYPE, STATE_DTYPE, TRANSITION_DTYPE, IndexCorrector,
                        RandomAccessPartition, load_partition, partition_from_records,
                        store_partition)
from .records import (Branch, StateEnd, TransitionEnd, decode_stream, encode_record,
                      encode_records, stream_size)

__all__ = [
    "IO_STATS", "ChunkWriter", "IOStats", "PartitionFileSet", "PartitionMeta", "SeqFile",
    "detect_compression", "iter_raw", "read_meta", "write_meta",
    "frame_compress", "frame_decompress",
    "BRANCH_DTYPE", "STATE_DTYPE", "TRANSITION_DTYPE", "IndexCorrector",
    "RandomAccessPartition", "load_partition", "partition_from_records", "store_partition",
    "Branch", "StateEnd", "TransitionEnd", "decode_stream", "encode_record", "encode_records",
    "stream_size",
]
