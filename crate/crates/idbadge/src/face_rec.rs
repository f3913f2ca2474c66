//! Facial-recognition support providers.
//!
//! The result is advisory and only shown next to a link.

use std::collections::BTreeMap;
use std::path::Path;

use idbadge_core::{FaceRecSupport, PhotoId};
use serde::Deserialize;

/// One side of a compared pair.
#[derive(Debug, Clone, Copy)]
pub struct FaceRef<'a> {
    pub photo_id: &'a PhotoId,
    pub image_ref: &'a str,
}

#[derive(Debug, thiserror::Error)]
#[error("face recognition unavailable: {0}")]
pub struct ProviderUnavailable(pub String);

pub trait FaceRecProvider: Send + Sync {
    fn compare(&self, a: FaceRef<'_>, b: FaceRef<'_>) -> Result<FaceRecSupport, ProviderUnavailable>;
}

/// Queries `provider`, mapping failures to `Unknown`.
pub fn support(provider: &dyn FaceRecProvider, a: FaceRef<'_>, b: FaceRef<'_>) -> FaceRecSupport {
    provider.compare(a, b).unwrap_or_else(|e| {
        tracing::warn!(photo_a = %a.photo_id, photo_b = %b.photo_id, "{e}");
        FaceRecSupport::Unknown
    })
}

/// Answers `Unknown` for every pair.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubProvider;

impl FaceRecProvider for StubProvider {
    fn compare(&self, _: FaceRef<'_>, _: FaceRef<'_>) -> Result<FaceRecSupport, ProviderUnavailable> {
        Ok(FaceRecSupport::Unknown)
    }
}

/// Lookup table keyed by unordered photo pair.
///
/// ```toml
/// [[pair]]
/// a = "p3"
/// b = "p5"
/// support = "Supported"
/// ```
#[derive(Debug, Clone, Default)]
pub struct FixtureProvider {
    table: BTreeMap<(PhotoId, PhotoId), FaceRecSupport>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureFile {
    #[serde(default)]
    pair: Vec<FixtureRow>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureRow {
    a: PhotoId,
    b: PhotoId,
    support: FaceRecSupport,
}

fn key(a: &PhotoId, b: &PhotoId) -> (PhotoId, PhotoId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl FixtureProvider {
    pub fn new<I: IntoIterator<Item = (PhotoId, PhotoId, FaceRecSupport)>>(rows: I) -> Self {
        FixtureProvider { table: rows.into_iter().map(|(a, b, s)| (key(&a, &b), s)).collect() }
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        let file: FixtureFile = toml::from_str(text)?;
        Ok(Self::new(file.pair.into_iter().map(|r| (r.a, r.b, r.support))))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

impl FaceRecProvider for FixtureProvider {
    fn compare(&self, a: FaceRef<'_>, b: FaceRef<'_>) -> Result<FaceRecSupport, ProviderUnavailable> {
        Ok(self.table.get(&key(a.photo_id, b.photo_id)).copied().unwrap_or_default())
    }
}
