//! Projected bubbles, the Green operator and the asymptotic lemmas of the
//! bubble expansion.

pub mod harmonic;
pub mod inequalities;
pub mod istar;
pub mod lemmas;
pub mod projected;

pub use istar::{green_ball, istar_ball, SourceHint};
pub use lemmas::{default_grid, verify_lemma, LemmaId, LemmaParams, LemmaReport};
pub use projected::{bubble_mass, projected_bubble, ProjectedBubble, ProjectionMode};
