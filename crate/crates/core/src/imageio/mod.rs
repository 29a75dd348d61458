//! Frame and mask I/O: binary netpbm codecs, frame-sequence directories,
//! ground-truth label images and tracker snapshot files.

mod groundtruth;
mod pnm;
mod sequence;
mod snapshot;

pub use groundtruth::{read_groundtruth, GroundTruthFrame, GtLabel};
pub use pnm::{
    decode_pnm, encode_frame, encode_mask, read_pnm, write_frame, write_mask, write_pnm, PnmImage,
};
pub use sequence::{
    discover_sequence, open_sequence, FramePattern, SequenceItem, SequenceReader, SequenceSpec,
};
pub use snapshot::{
    decode_snapshot, encode_snapshot, load_snapshot, save_snapshot, Snapshot, SNAPSHOT_MAGIC,
};
