//! Identification-source taxonomy.
//!
//! Every source a user cites for an identification is one of 23 named
//! source types, each belonging to exactly one of three trust categories.
//! Callers that did not give a type use [`SourceType::Unspecified`], which is
//! bracketed with word-of-mouth identifications.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// High-level trust tier of a source.
///
/// Ordering follows trust: `Primary < SecondaryScholarly < SecondaryNonScholarly`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SourceCategory {
    #[serde(rename = "Primary Source")]
    Primary,
    #[serde(rename = "Secondary Source (Scholarly)")]
    SecondaryScholarly,
    #[serde(rename = "Secondary Source (Non-Scholarly)")]
    SecondaryNonScholarly,
}

impl SourceCategory {
    /// All categories, most trustworthy first.
    pub const ALL: [SourceCategory; 3] = [
        SourceCategory::Primary,
        SourceCategory::SecondaryScholarly,
        SourceCategory::SecondaryNonScholarly,
    ];

    /// 0 is the most trustworthy.
    pub const fn trust_rank(self) -> u8 {
        match self {
            SourceCategory::Primary => 0,
            SourceCategory::SecondaryScholarly => 1,
            SourceCategory::SecondaryNonScholarly => 2,
        }
    }

    pub const fn label(self) -> &'static str {
        match self {
            SourceCategory::Primary => "Primary Source",
            SourceCategory::SecondaryScholarly => "Secondary Source (Scholarly)",
            SourceCategory::SecondaryNonScholarly => "Secondary Source (Non-Scholarly)",
        }
    }
}

impl fmt::Display for SourceCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Free function form of [`SourceCategory::trust_rank`].
pub const fn trust_rank(category: SourceCategory) -> u8 {
    category.trust_rank()
}

macro_rules! source_types {
    ($( $variant:ident => ($label:literal, $category:ident, $group:expr) ),+ $(,)?) => {
        /// A named identification-source type.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum SourceType {
            $( $variant, )+
            /// No type was given by the user.
            Unspecified,
        }

        impl SourceType {
            /// Every named type in table order, followed by `Unspecified`.
            pub const ALL: [SourceType; 24] = [ $( SourceType::$variant, )+ SourceType::Unspecified ];

            /// Canonical label used on the wire. `Unspecified` is the empty string.
            pub const fn label(self) -> &'static str {
                match self {
                    $( SourceType::$variant => $label, )+
                    SourceType::Unspecified => "",
                }
            }

            pub const fn category(self) -> SourceCategory {
                match self {
                    $( SourceType::$variant => SourceCategory::$category, )+
                    SourceType::Unspecified => SourceCategory::SecondaryNonScholarly,
                }
            }

            /// Display sub-grouping shown next to the type (e.g. "Books").
            /// Not consumed by any rule.
            pub const fn display_group(self) -> Option<&'static str> {
                match self {
                    $( SourceType::$variant => $group, )+
                    SourceType::Unspecified => None,
                }
            }
        }
    };
}

source_types! {
    PeriodInscriptionWithValediction => ("Period Inscription with Valediction", Primary, Some("Inscription")),
    PeriodInscriptionWithoutValediction => ("Period Inscription without Valediction", Primary, Some("Inscription")),
    PeriodInscriptionOnUnionCase => ("Period Inscription on Union Case", Primary, Some("Inscription")),
    PeriodInscriptionOnAlbumPage => ("Period Inscription on Album Page", Primary, Some("Inscription")),
    PeriodPublication => ("Period publication", SecondaryScholarly, Some("Books")),
    ModernPublication => ("Modern publication", SecondaryScholarly, Some("Books")),
    PeriodDocuments => ("Period documents", SecondaryScholarly, Some("Groupings")),
    LibraryOfCongress => ("Library of Congress", SecondaryScholarly, Some("Scholarly Website")),
    NationalArchives => ("National Archives", SecondaryScholarly, Some("Scholarly Website")),
    UsAhecMollus => ("US Army Heritage and Education Center (MOLLUS)", SecondaryScholarly, Some("Scholarly Website")),
    OtherLibraryMuseumArchive => ("Other library, museum or archive", SecondaryScholarly, Some("Scholarly Website")),
    ModernInscription => ("Modern Inscriptions", SecondaryNonScholarly, Some("Inscription")),
    AncestryCom => ("Ancestry.com", SecondaryNonScholarly, Some("Genealogy Website")),
    Fold3 => ("Fold3", SecondaryNonScholarly, Some("Genealogy Website")),
    FindAGrave => ("Find A Grave", SecondaryNonScholarly, Some("Genealogy Website")),
    AcwrdHds => ("American Civil War Research Database (HDS)", SecondaryNonScholarly, Some("Genealogy Website")),
    OtherGenealogyWebsite => ("Other genealogy website", SecondaryNonScholarly, Some("Genealogy Website")),
    AuctionHouseWebsite => ("Auction house website", SecondaryNonScholarly, Some("Auction")),
    EbayListing => ("eBay listing", SecondaryNonScholarly, Some("Auction")),
    DealerOrCollector => ("Dealer or collector", SecondaryNonScholarly, Some("Word-of-Mouth")),
    FamilyOrDescendant => ("Family or descendant", SecondaryNonScholarly, Some("Word-of-Mouth")),
    MiscWebsitesSocialMedia => ("Misc. Websites / social media", SecondaryNonScholarly, None),
    Other => ("Other", SecondaryNonScholarly, None),
}

/// Maps a source type onto its trust category.
pub const fn classify_source(source_type: SourceType) -> SourceCategory {
    source_type.category()
}

impl fmt::Display for SourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown source type {0:?}")]
pub struct UnknownSourceType(pub alloc::string::String);

impl FromStr for SourceType {
    type Err = UnknownSourceType;

    /// Accepts the canonical label, ignoring ASCII case and surrounding
    /// whitespace. The empty string parses as `Unspecified`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        SourceType::ALL
            .iter()
            .copied()
            .find(|t| t.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownSourceType(s.into()))
    }
}

impl Serialize for SourceType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for SourceType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = alloc::string::String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}
