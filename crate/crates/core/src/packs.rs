//! Domain packs, policies and templates shipped with the crate.

use std::io;
use std::sync::Arc;

use crate::compose::RepositoryPolicy;
use crate::domain::{ActionKind, DomainError, DomainModule};
use crate::license::LicenseTemplate;
use crate::purpose::{PurposeProfile, Taxonomy};

const FERPA_MANIFEST: &str = include_str!("../../../domains/ferpa/manifest.toml");
const FERPA_RULES: &str = include_str!("../../../domains/ferpa/ferpa.rules");
const FERPA_QUESTIONS: &str = include_str!("../../../domains/ferpa/questions.toml");
const FERPA_SNIPPETS: &str = include_str!("../../../domains/ferpa/snippets.toml");
const CMR_MANIFEST: &str = include_str!("../../../domains/cmr/manifest.toml");
const CMR_RULES: &str = include_str!("../../../domains/cmr/cmr.rules");
const CMR_QUESTIONS: &str = include_str!("../../../domains/cmr/questions.toml");

pub const UNIVERSITY_X_POLICY: &str = include_str!("../../../domains/policies/universityX.toml");
pub const FERPA_ONLY_POLICY: &str = include_str!("../../../domains/policies/ferpa_only.toml");
pub const SAMPLE_TAXONOMY: &str = include_str!("../../../domains/purpose/taxonomy.tsv");
pub const SAMPLE_PURPOSE_PROFILE: &str = include_str!("../../../domains/purpose/education_research.toml");
pub const RELEASE_TEMPLATE: &str = include_str!("../../../domains/templates/release.txt");
pub const DEPOSIT_TEMPLATE: &str = include_str!("../../../domains/templates/deposit.txt");
pub const ACCEPT_TEMPLATE: &str = include_str!("../../../domains/templates/accept.txt");

fn embedded(files: &'static [(&'static str, &'static str)]) -> impl Fn(&str) -> io::Result<String> {
    move |name| {
        files
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| text.to_string())
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, name.to_string()))
    }
}

/// The FERPA pack.
pub fn build_ferpa_module() -> DomainModule {
    DomainModule::from_sources(
        FERPA_MANIFEST,
        embedded(&[("ferpa.rules", FERPA_RULES), ("questions.toml", FERPA_QUESTIONS), ("snippets.toml", FERPA_SNIPPETS)]),
    )
    .expect("shipped FERPA pack loads")
}

/// The stub records-law domain used to exercise composition.
pub fn build_cmr_module() -> DomainModule {
    DomainModule::from_sources(CMR_MANIFEST, embedded(&[("cmr.rules", CMR_RULES), ("questions.toml", CMR_QUESTIONS)]))
        .expect("shipped cmr pack loads")
}

/// Every shipped domain.
pub fn builtin_domains() -> Vec<Arc<DomainModule>> {
    vec![Arc::new(build_ferpa_module()), Arc::new(build_cmr_module())]
}

pub fn builtin_domain(id: &str) -> Option<DomainModule> {
    match id {
        "ferpa" => Some(build_ferpa_module()),
        "cmr" => Some(build_cmr_module()),
        _ => None,
    }
}

/// Policy with FERPA only, the 0.1 budget threshold and the PSI alias.
pub fn ferpa_only_policy() -> RepositoryPolicy {
    RepositoryPolicy::parse(FERPA_ONLY_POLICY).expect("shipped policy parses")
}

/// Policy composing FERPA and the stub domain.
pub fn university_x_policy() -> RepositoryPolicy {
    RepositoryPolicy::parse(UNIVERSITY_X_POLICY).expect("shipped policy parses")
}

/// Loads a domain from a directory, or a shipped one when `spec` names it.
pub fn load_domain(spec: &str) -> Result<DomainModule, DomainError> {
    let path = std::path::Path::new(spec);
    if path.is_dir() {
        return DomainModule::load_dir(path);
    }
    if path.file_name().is_some_and(|n| n == "manifest.toml") {
        if let Some(dir) = path.parent() {
            return DomainModule::load_dir(dir);
        }
    }
    builtin_domain(spec).ok_or_else(|| DomainError::UnknownDomain(spec.into()))
}

/// The shipped license template for `kind`.
pub fn template(kind: ActionKind) -> LicenseTemplate {
    let body = match kind {
        ActionKind::Deposit => DEPOSIT_TEMPLATE,
        ActionKind::Accept => ACCEPT_TEMPLATE,
        ActionKind::Release => RELEASE_TEMPLATE,
    };
    LicenseTemplate::parse(kind, body)
}

/// The sample subject taxonomy.
pub fn sample_taxonomy() -> Taxonomy {
    Taxonomy::parse(SAMPLE_TAXONOMY).expect("shipped taxonomy parses")
}

/// Education-and-research purpose profile over [`sample_taxonomy`].
pub fn sample_purpose_profile() -> PurposeProfile {
    PurposeProfile::parse(SAMPLE_PURPOSE_PROFILE, &sample_taxonomy()).expect("shipped profile parses")
}
