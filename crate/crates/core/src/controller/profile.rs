use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Teacher,
    Reviewer,
    #[serde(rename = "general")]
    GeneralReader,
    Writer,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Teacher, Role::Reviewer, Role::GeneralReader, Role::Writer];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Teacher => "teacher",
            Role::Reviewer => "reviewer",
            Role::GeneralReader => "general",
            Role::Writer => "writer",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown role {0:?} (expected teacher, reviewer, general or writer)")]
pub struct UnknownRole(pub String);

impl FromStr for Role {
    type Err = UnknownRole;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| UnknownRole(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    MaskingTape,
    Smudge,
    EraserCrumb,
    ResidualGlue,
    Stencil,
    GhostText,
    Font,
}

impl Channel {
    pub const ALL: [Channel; 7] = [
        Channel::MaskingTape,
        Channel::Smudge,
        Channel::EraserCrumb,
        Channel::ResidualGlue,
        Channel::Stencil,
        Channel::GhostText,
        Channel::Font,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::MaskingTape => "masking-tape",
            Channel::Smudge => "smudge",
            Channel::EraserCrumb => "eraser-crumb",
            Channel::ResidualGlue => "residual-glue",
            Channel::Stencil => "stencil",
            Channel::GhostText => "ghost-text",
            Channel::Font => "font",
        }
    }

    /// Variants the vocabulary defines for this channel.
    pub fn variants(self) -> &'static [Variant] {
        use Variant::*;
        match self {
            Channel::MaskingTape => &[Single, Stacked, Scrunched, Torn, Segmented],
            Channel::Smudge => &[Single, Segmented],
            Channel::EraserCrumb => &[Solid, DensityVaried],
            Channel::ResidualGlue => &[Single, Sequenced],
            Channel::Stencil => &[Single, Layered, Dotted, Lined],
            Channel::GhostText => &[InstructionOnly, Full],
            Channel::Font => &[Script, Sans],
        }
    }

    /// Channels whose marks may be nested directly inside a mark of this one.
    pub fn may_contain(self, child: Channel) -> bool {
        matches!(
            (self, child),
            (Channel::MaskingTape, Channel::Smudge)
                | (Channel::MaskingTape, Channel::EraserCrumb)
                | (Channel::Smudge, Channel::EraserCrumb)
                | (Channel::EraserCrumb, Channel::GhostText)
                | (Channel::Stencil, Channel::Stencil)
        )
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Single,
    Stacked,
    Scrunched,
    Torn,
    Segmented,
    Solid,
    DensityVaried,
    Sequenced,
    Layered,
    Dotted,
    Lined,
    InstructionOnly,
    Full,
    Script,
    Sans,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Single => "single",
            Variant::Stacked => "stacked",
            Variant::Scrunched => "scrunched",
            Variant::Torn => "torn",
            Variant::Segmented => "segmented",
            Variant::Solid => "solid",
            Variant::DensityVaried => "density-varied",
            Variant::Sequenced => "sequenced",
            Variant::Layered => "layered",
            Variant::Dotted => "dotted",
            Variant::Lined => "lined",
            Variant::InstructionOnly => "instruction-only",
            Variant::Full => "full",
            Variant::Script => "script",
            Variant::Sans => "sans",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How many versions back from the final one traces are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemporalDepth {
    Versions(usize),
    Unbounded,
}

impl TemporalDepth {
    /// Whether something that happened in `version` is within reach of `last`.
    pub fn keeps(self, version: usize, last: usize) -> bool {
        match self {
            TemporalDepth::Unbounded => true,
            TemporalDepth::Versions(d) => last.saturating_sub(version) <= d,
        }
    }
}

impl Serialize for TemporalDepth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TemporalDepth::Versions(n) => s.serialize_u64(*n as u64),
            TemporalDepth::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for TemporalDepth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(TemporalDepth::Versions(n as usize)),
            Raw::S(s) if s == "unbounded" => Ok(TemporalDepth::Unbounded),
            Raw::S(s) => Err(serde::de::Error::custom(format!(
                "temporal depth must be a version count or \"unbounded\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Phrase,
    Node,
    Paragraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptDetail {
    InstructionOnly,
    FullPrompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentProfile {
    pub role: Role,
    pub variants: BTreeMap<Channel, BTreeSet<Variant>>,
    pub temporal_depth: TemporalDepth,
    pub granularity: Granularity,
    pub prompt_detail: PromptDetail,
}

impl IntentProfile {
    pub fn allows(&self, channel: Channel, variant: Variant) -> bool {
        self.variants
            .get(&channel)
            .is_some_and(|set| set.contains(&variant))
    }

    pub fn allows_channel(&self, channel: Channel) -> bool {
        self.variants.get(&channel).is_some_and(|set| !set.is_empty())
    }

    pub fn full_prompt(&self) -> bool {
        self.prompt_detail == PromptDetail::FullPrompt
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (channel, set) in &self.variants {
            if let Some(v) = set.iter().find(|v| !channel.variants().contains(v)) {
                return Err(ConfigError::Profile {
                    role: self.role.to_string(),
                    message: format!("`{v}` is not a {channel} variant"),
                });
            }
        }
        Ok(())
    }
}

fn all_of(channel: Channel) -> (Channel, BTreeSet<Variant>) {
    (channel, channel.variants().iter().copied().collect())
}

fn some(channel: Channel, variants: &[Variant]) -> (Channel, BTreeSet<Variant>) {
    (channel, variants.iter().copied().collect())
}

/// The built-in profile for a role.
pub fn intent_profile(role: Role) -> IntentProfile {
    use Variant::*;
    match role {
        Role::Teacher | Role::Writer => IntentProfile {
            role,
            variants: Channel::ALL.into_iter().map(all_of).collect(),
            temporal_depth: TemporalDepth::Unbounded,
            granularity: Granularity::Phrase,
            prompt_detail: PromptDetail::FullPrompt,
        },
        Role::Reviewer => IntentProfile {
            role,
            variants: [
                some(Channel::MaskingTape, &[Single, Stacked]),
                some(Channel::EraserCrumb, &[Solid]),
                all_of(Channel::Font),
            ]
            .into_iter()
            .collect(),
            temporal_depth: TemporalDepth::Versions(1),
            granularity: Granularity::Node,
            prompt_detail: PromptDetail::InstructionOnly,
        },
        Role::GeneralReader => IntentProfile {
            role,
            variants: [
                some(Channel::MaskingTape, &[Single, Scrunched, Torn]),
                some(Channel::Smudge, &[Single]),
                some(Channel::EraserCrumb, &[DensityVaried]),
                some(Channel::GhostText, &[Full]),
                some(Channel::Stencil, &[Single]),
                all_of(Channel::Font),
            ]
            .into_iter()
            .collect(),
            temporal_depth: TemporalDepth::Versions(3),
            granularity: Granularity::Node,
            prompt_detail: PromptDetail::FullPrompt,
        },
    }
}

/// Partial profile from configuration; unset fields keep the built-in value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variants: Option<BTreeMap<Channel, BTreeSet<Variant>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temporal_depth: Option<TemporalDepth>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub granularity: Option<Granularity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt_detail: Option<PromptDetail>,
}

impl ProfileOverride {
    fn merge(&mut self, other: ProfileOverride) {
        if other.variants.is_some() {
            self.variants = other.variants;
        }
        if other.temporal_depth.is_some() {
            self.temporal_depth = other.temporal_depth;
        }
        if other.granularity.is_some() {
            self.granularity = other.granularity;
        }
        if other.prompt_detail.is_some() {
            self.prompt_detail = other.prompt_detail;
        }
    }

    fn apply(&self, mut profile: IntentProfile) -> IntentProfile {
        if let Some(v) = &self.variants {
            profile.variants = v.clone();
        }
        if let Some(d) = self.temporal_depth {
            profile.temporal_depth = d;
        }
        if let Some(g) = self.granularity {
            profile.granularity = g;
        }
        if let Some(p) = self.prompt_detail {
            profile.prompt_detail = p;
        }
        profile
    }
}

/// Profile overrides keyed by role. The writer profile starts from the
/// teacher's, including the teacher's overrides.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProfileTable(BTreeMap<Role, ProfileOverride>);

impl ProfileTable {
    pub fn set(&mut self, role: Role, o: ProfileOverride) {
        self.0.insert(role, o);
    }

    /// Fields set in `other` win.
    pub fn merge(&mut self, other: ProfileTable) {
        for (role, o) in other.0 {
            self.0.entry(role).or_default().merge(o);
        }
    }

    pub fn profile(&self, role: Role) -> IntentProfile {
        let base = match role {
            Role::Writer => {
                let mut p = self.profile(Role::Teacher);
                p.role = Role::Writer;
                p
            }
            _ => intent_profile(role),
        };
        match self.0.get(&role) {
            Some(o) => o.apply(base),
            None => base,
        }
    }

    pub fn resolved(&self) -> BTreeMap<Role, IntentProfile> {
        Role::ALL.into_iter().map(|r| (r, self.profile(r))).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.resolved().values().try_for_each(IntentProfile::validate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn teacher_has_every_variant() {
        let t = intent_profile(Role::Teacher);
        for c in Channel::ALL {
            for &v in c.variants() {
                assert!(t.allows(c, v), "{c} {v}");
            }
        }
    }

    #[test]
    fn reviewer_has_no_glue() {
        assert!(!intent_profile(Role::Reviewer).allows_channel(Channel::ResidualGlue));
    }

    #[test]
    fn general_reader_sees_smudge_and_tape_and_further_back_than_reviewer() {
        let g = intent_profile(Role::GeneralReader);
        assert!(g.allows_channel(Channel::Smudge));
        assert!(g.allows_channel(Channel::MaskingTape));
        let r = intent_profile(Role::Reviewer);
        assert!(g.temporal_depth >= r.temporal_depth);
    }

    #[test]
    fn builtin_profiles_are_valid() {
        ProfileTable::default().validate().unwrap();
    }

    #[test]
    fn writer_follows_teacher_overrides() {
        let mut table = ProfileTable::default();
        table.set(
            Role::Teacher,
            ProfileOverride {
                temporal_depth: Some(TemporalDepth::Versions(4)),
                ..Default::default()
            },
        );
        let w = table.profile(Role::Writer);
        assert_eq!(w.role, Role::Writer);
        assert_eq!(w.temporal_depth, TemporalDepth::Versions(4));
    }

    #[test]
    fn foreign_variant_is_rejected() {
        let mut table = ProfileTable::default();
        table.set(
            Role::Reviewer,
            ProfileOverride {
                variants: Some([some(Channel::Font, &[Variant::Stacked])].into_iter().collect()),
                ..Default::default()
            },
        );
        assert!(table.validate().is_err());
    }

    #[test]
    fn role_names_round_trip() {
        for r in Role::ALL {
            assert_eq!(r.as_str().parse::<Role>().unwrap(), r);
            assert_eq!(serde_json::to_value(r).unwrap(), r.as_str());
        }
        assert!("admin".parse::<Role>().is_err());
    }
}
