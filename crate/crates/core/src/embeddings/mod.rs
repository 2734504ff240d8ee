//! Per-candidate term statistics and PPMI-SVD embeddings.

mod cooccur;
pub mod io;
mod knn;
mod ppmi;
mod tokenize;
mod vocab;

pub use cooccur::{cooccurrence, CooccurrenceMatrix};
pub use knn::{cosine, knn, KnnLists, Neighbor};
pub use ppmi::{ppmi, ppmi_svd_embed, EmbeddingParams, EmbeddingTable, DENSE_SVD_LIMIT};
pub use tokenize::{default_stopwords, parse_word_list, tokenize};
pub use vocab::{build_vocabulary, tokenize_corpus, TokenizedDoc, Vocabulary};
