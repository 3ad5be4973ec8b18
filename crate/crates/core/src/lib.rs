//! GMM-guided synthetic minority oversampling.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataset`]: labeled instances, CSV I/O, class partition and splits.
//! * [`textvec`]: tokenizer, stop words, Porter stemmer and TF-IDF.
//! * [`sampling`]: k-NN, SMOTE, hypersphere sampling, ROS/RUS baselines.
//! * [`gmm`]: Gaussian mixtures trained by EM, kernel selection and filtering.
//! * [`oversample`]: the full GSMOTE pipeline and dataset augmentation.
//! * [`classify`]: confusion-matrix metrics, ELM and Gaussian naive Bayes.
//! * [`optimize`]: differential evolution and the ELM-accuracy fitness.
//!
//! Every stochastic operation takes an explicit random source so results are
//! reproducible from a seed. See [`rng`] for the substream scheme.

pub mod classify;
pub mod dataset;
pub mod error;
pub mod gmm;
pub mod optimize;
pub mod oversample;
pub mod rng;
pub mod sampling;
pub mod textvec;

pub use error::{Error, Result};
