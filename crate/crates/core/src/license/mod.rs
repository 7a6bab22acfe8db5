//! License documents assembled from term snippets.

mod placeholder;
mod provenance;
mod render;
mod snippet;

pub use placeholder::{bracket_re, fill, placeholders, FillError, Placeholder, Role};
pub use provenance::{
    emit_provenance, AnswerRecord, ChainEntry, DomainProof, FactOrigin, FactRecord, LicenseBundle, ProvenanceInput,
    ProvenanceRecord,
};
pub use render::{
    chosen_set, fill_placeholders, generate_license, render_license, FilledTerm, LicenseDocument, LicenseError,
    LicenseTemplate, AFFIRMATIONS_SLOT,
};
pub use snippet::{select_terms, SelectError, TermSnippet};
