//! Poisson environment encoded as per-box Bernoulli and uniform tapes.

mod environment;
mod snapshot;
mod tape;

pub use environment::{
    flip_bit, resample_box, sample_environment, thin_to_qn, BoxState, Environment, ThinningSpec,
    MAX_CELLS_PER_SIDE,
};
pub(crate) use environment::lex_cmp;
pub use snapshot::{export_snapshot, import_snapshot};
pub use tape::{
    decode_count_with, decode_poisson_count, encode_poisson_count, leading_ones, BoxTape, MAX_TAPE_BITS,
};
