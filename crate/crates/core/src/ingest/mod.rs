//! Getting data in: IDX tensors, matrix CSV files, synthetic pools, and
//! linear encoders that map raw rows to latent embeddings.

pub mod encoder;
pub mod idx;
pub mod matrix_csv;
pub mod synth;

pub use encoder::{fit_pca, fit_random_projection, standardize_rows, EncoderKind, LinearEncoder};
pub use idx::{parse_idx, read_idx, serialize_idx, write_idx, RawTensor};
pub use matrix_csv::{read_matrix_csv, read_matrix_csv_from, write_matrix_csv, write_matrix_csv_to, MatrixCsv};
pub use synth::{class_centers, imbalanced_priors, synth_clusters, SynthConfig};
