//! Listwise tuning of linear reranking models with sparse features.
//!
//! Each N-best list is treated as a ranking problem: the hypotheses ordered
//! by sentence BLEU form a ground-truth permutation, and the weights are
//! fitted by maximizing the Plackett-Luce likelihood of those permutations
//! under a Gaussian prior. The fitted weights then rerank new lists.
//!
//! ```
//! use pltune::corpus::{parse_nbest, parse_refs};
//! use pltune::pl_model::Weights;
//! use pltune::trainer::{train, TrainConfig};
//! use pltune::tuner::rerank;
//!
//! let nbest = "\
//! 0 ||| the cat sat ||| lm=-1 match=3 ||| 0
//! 0 ||| a dog ran ||| lm=-2 match=0 ||| 0
//! 1 ||| on the mat ||| lm=-1.5 match=3 ||| 0
//! 1 ||| under it ||| lm=-0.5 match=0 ||| 0
//! ";
//! let refs = "0 ||| the cat sat\n1 ||| on the mat\n";
//! let corpus = parse_nbest(nbest.as_bytes())?;
//! let refs = parse_refs(refs.as_bytes())?;
//!
//! let dim = corpus.feature_index().len();
//! let report = train(&corpus, &refs, &TrainConfig::default(), &Weights::zeros(dim))?;
//! assert!(report.converged);
//!
//! let best = rerank(&corpus, &report.final_weights, 1)?;
//! assert_eq!(best[1].hypotheses[0].tokens, ["on", "the", "mat"]);
//! # Ok::<(), pltune::Error>(())
//! ```
//!
//! The `book/` directory next to this crate explains the model in more
//! depth; its code listings are compiled and run as doctests of this crate.

pub mod bleu;
pub mod corpus;
mod error;
pub mod pl_model;
pub mod rng;
pub mod trainer;
pub mod tuner;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/plackett_luce.md")]
    mod plackett_luce {}
    #[doc = include_str!("../../../book/src/objective.md")]
    mod objective {}
    #[doc = include_str!("../../../book/src/bleu.md")]
    mod bleu {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/resampling.md")]
    mod resampling {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    mod tuning {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
