//! Non-neural baselines: Laplacian Eigenmaps and biased-walk SkipGram.

mod laplacian;
mod skipgram;
mod walks;

pub use laplacian::laplacian_eigenmaps;
pub use skipgram::{skipgram_train, window_pairs, SkipGramConfig, SkipGramOutput};
pub use walks::{biased_random_walks, WalkConfig, WalkCorpus};
