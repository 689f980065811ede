//! Residual of the two-bubble approximant: error-field norms and the
//! four-dimensional Pohozaev identities.

pub mod norms;
pub mod pair;
pub mod pohozaev;

pub use norms::{coupling_dominance, error_norms, error_scan, BetaRule, CouplingReport, ErrorReport, ErrorScan, TermFit};
pub use pair::{assemble_pair, error_field, ErrorTerms, FieldPair};
pub use pohozaev::{pohozaev_check, pohozaev_j0, PohozaevJ0, PohozaevReport};
