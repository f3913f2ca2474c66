//! Community votes and the consensus/dispute folds over them.
//!
//! Two kinds of votes exist: comparison votes on a photo link ("do these two
//! photos show the same person?") and confidence votes on an identification.
//! Each voter has exactly one effective vote per target; a later vote
//! replaces an earlier one. All predicates below read only effective votes.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::model::{IdentificationId, LinkId, Seq, UserId};

/// Step-one verdict on a pair of photos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComparisonVerdict {
    Replica,
    #[serde(rename = "Facial Match", alias = "FacialMatch")]
    FacialMatch,
    #[serde(rename = "Not Sure", alias = "NotSure")]
    NotSure,
    #[serde(rename = "Different People", alias = "DifferentPeople")]
    DifferentPeople,
}

impl ComparisonVerdict {
    pub const ALL: [ComparisonVerdict; 4] = [
        ComparisonVerdict::Replica,
        ComparisonVerdict::FacialMatch,
        ComparisonVerdict::NotSure,
        ComparisonVerdict::DifferentPeople,
    ];

    /// Replica and facial match both assert "same person".
    pub const fn is_match(self) -> bool {
        matches!(self, ComparisonVerdict::Replica | ComparisonVerdict::FacialMatch)
    }

    pub const fn label(self) -> &'static str {
        match self {
            ComparisonVerdict::Replica => "Replica",
            ComparisonVerdict::FacialMatch => "Facial Match",
            ComparisonVerdict::NotSure => "Not Sure",
            ComparisonVerdict::DifferentPeople => "Different People",
        }
    }
}

/// Step-two confidence vote on an identification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IdVoteVerdict {
    #[serde(rename = "Yes - Highly Confident", alias = "YesHighly")]
    YesHighly,
    #[serde(rename = "Yes - Slightly Confident", alias = "YesSlightly")]
    YesSlightly,
    #[serde(rename = "Not Sure", alias = "NotSure")]
    NotSure,
    #[serde(rename = "No - Slightly Confident", alias = "NoSlightly")]
    NoSlightly,
    #[serde(rename = "No - Highly Confident", alias = "NoHighly")]
    NoHighly,
}

impl IdVoteVerdict {
    pub const ALL: [IdVoteVerdict; 5] = [
        IdVoteVerdict::YesHighly,
        IdVoteVerdict::YesSlightly,
        IdVoteVerdict::NotSure,
        IdVoteVerdict::NoSlightly,
        IdVoteVerdict::NoHighly,
    ];

    pub const fn polarity(self) -> i8 {
        match self {
            IdVoteVerdict::YesHighly | IdVoteVerdict::YesSlightly => 1,
            IdVoteVerdict::NotSure => 0,
            IdVoteVerdict::NoSlightly | IdVoteVerdict::NoHighly => -1,
        }
    }

    pub const fn weight(self) -> u8 {
        match self {
            IdVoteVerdict::YesHighly | IdVoteVerdict::NoHighly => 2,
            IdVoteVerdict::YesSlightly | IdVoteVerdict::NoSlightly => 1,
            IdVoteVerdict::NotSure => 0,
        }
    }

    pub const fn score(self) -> i64 {
        self.polarity() as i64 * self.weight() as i64
    }

    pub const fn label(self) -> &'static str {
        match self {
            IdVoteVerdict::YesHighly => "Yes - Highly Confident",
            IdVoteVerdict::YesSlightly => "Yes - Slightly Confident",
            IdVoteVerdict::NotSure => "Not Sure",
            IdVoteVerdict::NoSlightly => "No - Slightly Confident",
            IdVoteVerdict::NoHighly => "No - Highly Confident",
        }
    }
}

/// Exact fraction in `(0, 1]`, used for supermajority thresholds. Always in
/// lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u64,
    den: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RatioError {
    #[error("ratio {0:?} is not of the form `a/b` or a decimal")]
    Syntax(String),
    #[error("ratio must lie in (0, 1]")]
    OutOfRange,
}

impl Ratio {
    pub const TWO_THIRDS: Ratio = Ratio { num: 2, den: 3 };

    pub fn new(num: u64, den: u64) -> Result<Self, RatioError> {
        if den == 0 || num == 0 || num > den {
            return Err(RatioError::OutOfRange);
        }
        let g = gcd(num, den);
        Ok(Ratio { num: num / g, den: den / g })
    }

    pub const fn numerator(self) -> u64 {
        self.num
    }

    pub const fn denominator(self) -> u64 {
        self.den
    }

    /// `part >= self * whole`
    pub const fn reached_by(self, part: u64, whole: u64) -> bool {
        part as u128 * self.den as u128 >= self.num as u128 * whole as u128
    }

    /// `part > (1 - self) * whole`
    pub const fn complement_exceeded_by(self, part: u64, whole: u64) -> bool {
        part as u128 * self.den as u128 > (self.den - self.num) as u128 * whole as u128
    }

    fn from_decimal(s: &str) -> Option<Ratio> {
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() || frac.len() > 12 {
            return None;
        }
        let digits = |p: &str| p.is_empty() || p.bytes().all(|b| b.is_ascii_digit());
        if !digits(int) || !digits(frac) {
            return None;
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
        Some(Ratio { num: int.checked_mul(den)?.checked_add(frac)?, den })
    }
}

const fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Ratio {
    type Err = RatioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parsed = match s.split_once('/') {
            Some((n, d)) => n.trim().parse().ok().zip(d.trim().parse().ok()),
            None => Ratio::from_decimal(s).map(|r| (r.num, r.den)),
        };
        let (num, den) = parsed.ok_or_else(|| RatioError::Syntax(s.into()))?;
        Ratio::new(num, den)
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;

        impl de::Visitor<'_> for Visitor {
            type Value = Ratio;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a fraction like \"2/3\" or a number in (0, 1]")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Ratio, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Ratio, E> {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(E::custom(RatioError::OutOfRange));
                }
                let num = (v * 1_000_000.0 + 0.5) as u64;
                Ratio::new(num.max(1), 1_000_000).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Ratio, E> {
                Ratio::new(v, 1).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Ratio, E> {
                u64::try_from(v).map_err(|_| E::custom(RatioError::OutOfRange)).and_then(|v| self.visit_u64(v))
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}

/// Thresholds for consensus and dispute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsensusConfig {
    pub id_consensus_min: u64,
    pub match_min: u64,
    pub dispute_min: u64,
    pub supermajority: Ratio,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        ConsensusConfig {
            id_consensus_min: 5,
            match_min: 5,
            dispute_min: 2,
            supermajority: Ratio::TWO_THIRDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{key} must be at least 1")]
pub struct InvalidConsensusConfig {
    pub key: &'static str,
}

impl ConsensusConfig {
    pub fn validate(&self) -> Result<(), InvalidConsensusConfig> {
        for (key, v) in [
            ("id_consensus_min", self.id_consensus_min),
            ("match_min", self.match_min),
            ("dispute_min", self.dispute_min),
        ] {
            if v == 0 {
                return Err(InvalidConsensusConfig { key });
            }
        }
        Ok(())
    }
}

/// Folded outcome of the confidence votes on one identification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConsensusState {
    pub positive_voters: u64,
    pub negative_voters: u64,
    pub unsure_voters: u64,
    pub net_score: i64,
    pub consensus: bool,
    pub dispute: bool,
}

/// Evaluates consensus and dispute over a set of effective votes.
pub fn identification_consensus<I>(votes: I, cfg: &ConsensusConfig) -> ConsensusState
where
    I: IntoIterator<Item = IdVoteVerdict>,
{
    let mut st = ConsensusState::default();
    for v in votes {
        match v.polarity() {
            1 => st.positive_voters += 1,
            -1 => st.negative_voters += 1,
            _ => st.unsure_voters += 1,
        }
        st.net_score += v.score();
    }
    let decided = st.positive_voters + st.negative_voters;
    st.consensus = st.positive_voters >= cfg.id_consensus_min
        && cfg.supermajority.reached_by(st.positive_voters, decided);
    st.dispute = st.negative_voters >= cfg.dispute_min
        && cfg.supermajority.complement_exceeded_by(st.negative_voters, decided);
    st
}

/// Majority kind of "same person" among the match votes on a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchRelation {
    Replica,
    #[serde(rename = "Facial Match")]
    FacialMatch,
    Undecided,
}

/// Folded outcome of the comparison votes on one photo link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchConsensus {
    pub match_voters: u64,
    pub nonmatch_voters: u64,
    pub unsure_voters: u64,
    pub relation: MatchRelation,
    pub agreed_match: bool,
    pub match_dispute: bool,
}

pub fn comparison_consensus<I>(votes: I, cfg: &ConsensusConfig) -> MatchConsensus
where
    I: IntoIterator<Item = ComparisonVerdict>,
{
    let (mut replica, mut facial, mut nonmatch, mut unsure) = (0u64, 0u64, 0u64, 0u64);
    for v in votes {
        match v {
            ComparisonVerdict::Replica => replica += 1,
            ComparisonVerdict::FacialMatch => facial += 1,
            ComparisonVerdict::DifferentPeople => nonmatch += 1,
            ComparisonVerdict::NotSure => unsure += 1,
        }
    }
    let matches = replica + facial;
    let decided = matches + nonmatch;
    let relation = match replica.cmp(&facial) {
        core::cmp::Ordering::Greater => MatchRelation::Replica,
        core::cmp::Ordering::Less => MatchRelation::FacialMatch,
        core::cmp::Ordering::Equal => MatchRelation::Undecided,
    };
    MatchConsensus {
        match_voters: matches,
        nonmatch_voters: nonmatch,
        unsure_voters: unsure,
        relation,
        agreed_match: matches >= cfg.match_min && cfg.supermajority.reached_by(matches, decided),
        match_dispute: nonmatch >= cfg.dispute_min
            && cfg.supermajority.complement_exceeded_by(nonmatch, decided),
    }
}

/// One user's effective vote on a target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord<V> {
    pub voter: UserId,
    pub verdict: V,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub voted_at: Seq,
}

/// Latest-wins ballot box for a single target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ballots<V> {
    by_voter: BTreeMap<UserId, VoteRecord<V>>,
}

impl<V> Default for Ballots<V> {
    fn default() -> Self {
        Ballots { by_voter: BTreeMap::new() }
    }
}

impl<V: Copy> Ballots<V> {
    /// Records a vote, replacing any earlier vote by the same voter.
    pub fn cast(&mut self, record: VoteRecord<V>) {
        self.by_voter.insert(record.voter.clone(), record);
    }

    pub fn len(&self) -> usize {
        self.by_voter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_voter.is_empty()
    }

    pub fn get(&self, voter: &UserId) -> Option<&VoteRecord<V>> {
        self.by_voter.get(voter)
    }

    pub fn verdicts(&self) -> impl Iterator<Item = V> + '_ {
        self.by_voter.values().map(|r| r.verdict)
    }

    /// Effective votes ordered by the time they were cast.
    pub fn in_vote_order(&self) -> Vec<&VoteRecord<V>> {
        let mut v: Vec<_> = self.by_voter.values().collect();
        v.sort_by(|a, b| a.voted_at.cmp(&b.voted_at).then_with(|| a.voter.cmp(&b.voter)));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin<V> {
    pub verdict: V,
    pub count: u64,
}

/// Per-verdict counts plus the effective votes in vote-time order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteSummary<V> {
    pub histogram: Vec<HistogramBin<V>>,
    pub votes: Vec<VoteRecord<V>>,
}

impl<V> VoteSummary<V> {
    pub fn total(&self) -> u64 {
        self.histogram.iter().map(|b| b.count).sum()
    }
}

impl<V: Copy + PartialEq> VoteSummary<V> {
    pub fn count(&self, verdict: V) -> u64 {
        self.histogram.iter().find(|b| b.verdict == verdict).map_or(0, |b| b.count)
    }
}

fn summarize<V: Copy + PartialEq>(ballots: Option<&Ballots<V>>, all: &[V]) -> VoteSummary<V> {
    let votes: Vec<VoteRecord<V>> = ballots
        .map(|b| b.in_vote_order().into_iter().cloned().collect())
        .unwrap_or_default();
    let histogram = all
        .iter()
        .map(|&verdict| HistogramBin {
            verdict,
            count: votes.iter().filter(|r| r.verdict == verdict).count() as u64,
        })
        .collect();
    VoteSummary { histogram, votes }
}

/// Effective votes for every link and identification.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VoteBook {
    comparisons: BTreeMap<LinkId, Ballots<ComparisonVerdict>>,
    identifications: BTreeMap<IdentificationId, Ballots<IdVoteVerdict>>,
}

impl VoteBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cast_comparison(&mut self, link: &LinkId, record: VoteRecord<ComparisonVerdict>) {
        self.comparisons.entry(link.clone()).or_default().cast(record);
    }

    pub fn cast_identification(&mut self, identification: &IdentificationId, record: VoteRecord<IdVoteVerdict>) {
        self.identifications.entry(identification.clone()).or_default().cast(record);
    }

    pub fn comparison_ballots(&self, link: &LinkId) -> Option<&Ballots<ComparisonVerdict>> {
        self.comparisons.get(link)
    }

    pub fn identification_ballots(&self, identification: &IdentificationId) -> Option<&Ballots<IdVoteVerdict>> {
        self.identifications.get(identification)
    }

    pub fn match_consensus(&self, link: &LinkId, cfg: &ConsensusConfig) -> MatchConsensus {
        comparison_consensus(self.comparisons.get(link).into_iter().flat_map(Ballots::verdicts), cfg)
    }

    pub fn identification_consensus(&self, identification: &IdentificationId, cfg: &ConsensusConfig) -> ConsensusState {
        identification_consensus(
            self.identifications.get(identification).into_iter().flat_map(Ballots::verdicts),
            cfg,
        )
    }

    pub fn comparison_summary(&self, link: &LinkId) -> VoteSummary<ComparisonVerdict> {
        summarize(self.comparisons.get(link), &ComparisonVerdict::ALL)
    }

    pub fn identification_summary(&self, identification: &IdentificationId) -> VoteSummary<IdVoteVerdict> {
        summarize(self.identifications.get(identification), &IdVoteVerdict::ALL)
    }
}
