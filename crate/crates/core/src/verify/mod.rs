//! Empirical checks of the Littlewood-Paley theory on discrete operators.

pub mod corpus;
pub mod decay;
pub mod equivalence;
pub mod gaussian;
pub mod hebisch;
pub mod lemmas;
pub mod report;

pub use corpus::{gaussian_probes, make_corpus, Corpus, CorpusKind};
pub use decay::{fit_decay_constants, DecayFit, DecayOptions};
pub use equivalence::{equivalence_experiment, parseval_deviation, sobolev_experiment, system_independence, EquivalenceResults, RatioTable};
pub use gaussian::{gaussian_bound_fit, gaussian_report, GaussianFit, GaussianSearch, HeatSamples};
pub use hebisch::{hebisch_check, sobolev_norm, HebischCheck, HebischOptions};
pub use lemmas::{hl_operator_norm, maximal_characterization, maximal_lemma_check, Characterization, LemmaOptions, LemmaResults, MaximalResults};
pub use report::{Cell, Status, Table, VerificationReport, SCHEMA_VERSION};
