//! Registry of the 26 atomic paraphrase types and named subsets of them.
//!
//! Ids are dense (`0..26`) and follow the alphabetical order of the ETPC
//! frequency table, so iterating a [`TypeSet`] in ascending id order is also
//! the order reports are printed in.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

/// Canonical ETPC spellings, indexed by type id.
const LABELS: [&str; 26] = [
    "Addition/Deletion",
    "Change of format",
    "Change of order",
    "Converse substitution",
    "Coordination changes",
    "Derivational Changes",
    "Diathesis alternation",
    "Direct/indirect style alternations",
    "Ellipsis",
    "Entailment",
    "Identity",
    "Inflectional Changes",
    "Modal Verb Changes",
    "Negation switching",
    "Non-paraphrase",
    "Opposite polarity substitution (contextual)",
    "Opposite polarity substitution (habitual)",
    "Punctuation changes",
    "Same Polarity Substitution (contextual)",
    "Same Polarity Substitution (habitual)",
    "Same Polarity Substitution (named ent.)",
    "Semantic-based",
    "Spelling changes",
    "Subordination and nesting changes",
    "Syntax/discourse structure changes",
    "Synthetic/Analytic Substitution",
];

/// Number of registered types.
pub const TYPE_COUNT: usize = LABELS.len();

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown paraphrase type: {0:?}")]
pub struct UnknownType(pub String);

/// One atomic paraphrase type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParaphraseType(u8);

impl ParaphraseType {
    pub const ADDITION_DELETION: Self = Self(0);
    pub const CHANGE_OF_ORDER: Self = Self(2);
    pub const DERIVATIONAL_CHANGES: Self = Self(5);
    pub const IDENTITY: Self = Self(10);
    pub const INFLECTIONAL_CHANGES: Self = Self(11);
    pub const NON_PARAPHRASE: Self = Self(14);
    pub const PUNCTUATION_CHANGES: Self = Self(17);
    pub const SAME_POLARITY_CONTEXTUAL: Self = Self(18);
    pub const SEMANTIC_BASED: Self = Self(21);
    pub const SPELLING_CHANGES: Self = Self(22);
    pub const SUBORDINATION_NESTING: Self = Self(23);
    pub const SYNTHETIC_ANALYTIC: Self = Self(25);

    pub fn from_id(id: usize) -> Option<Self> {
        (id < TYPE_COUNT).then(|| Self(id as u8))
    }

    pub fn id(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> &'static str {
        LABELS[self.id()]
    }

    /// Every registered type in ascending id order.
    pub fn all() -> impl Iterator<Item = Self> {
        (0..TYPE_COUNT as u8).map(Self)
    }
}

/// Looks up a type by label, ignoring surrounding whitespace and ASCII case.
pub fn parse_type(label: &str) -> Result<ParaphraseType, UnknownType> {
    let wanted = label.trim();
    if wanted.is_empty() {
        return Err(UnknownType(label.to_string()));
    }
    LABELS
        .iter()
        .position(|canonical| canonical.eq_ignore_ascii_case(wanted))
        .map(|id| ParaphraseType(id as u8))
        .ok_or_else(|| UnknownType(label.to_string()))
}

impl FromStr for ParaphraseType {
    type Err = UnknownType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_type(s)
    }
}

impl fmt::Display for ParaphraseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for ParaphraseType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for ParaphraseType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let label = String::deserialize(deserializer)?;
        parse_type(&label).map_err(de::Error::custom)
    }
}

/// A set of paraphrase types, iterated in ascending id order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeSet(u32);

impl TypeSet {
    pub const fn empty() -> Self {
        Self(0)
    }

    /// The full registry.
    pub fn all() -> Self {
        Self((1u32 << TYPE_COUNT) - 1)
    }

    /// The ten types used for detection training and human evaluation.
    pub fn top10() -> Self {
        [
            ParaphraseType::ADDITION_DELETION,
            ParaphraseType::CHANGE_OF_ORDER,
            ParaphraseType::DERIVATIONAL_CHANGES,
            ParaphraseType::INFLECTIONAL_CHANGES,
            ParaphraseType::PUNCTUATION_CHANGES,
            ParaphraseType::SAME_POLARITY_CONTEXTUAL,
            ParaphraseType::SEMANTIC_BASED,
            ParaphraseType::SPELLING_CHANGES,
            ParaphraseType::SUBORDINATION_NESTING,
            ParaphraseType::SYNTHETIC_ANALYTIC,
        ]
        .into_iter()
        .collect()
    }

    pub fn insert(&mut self, t: ParaphraseType) -> bool {
        let fresh = !self.contains(t);
        self.0 |= 1 << t.0;
        fresh
    }

    pub fn remove(&mut self, t: ParaphraseType) -> bool {
        let present = self.contains(t);
        self.0 &= !(1 << t.0);
        present
    }

    pub fn contains(&self, t: ParaphraseType) -> bool {
        self.0 & (1 << t.0) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(&self, other: &TypeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersection(&self, other: &TypeSet) -> TypeSet {
        TypeSet(self.0 & other.0)
    }

    pub fn union(&self, other: &TypeSet) -> TypeSet {
        TypeSet(self.0 | other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ParaphraseType> + '_ {
        let bits = self.0;
        (0..TYPE_COUNT as u8)
            .filter(move |i| bits & (1 << i) != 0)
            .map(ParaphraseType)
    }

    /// Position of `t` within this set's iteration order.
    pub fn position(&self, t: ParaphraseType) -> Option<usize> {
        self.contains(t)
            .then(|| (self.0 & ((1u32 << t.0) - 1)).count_ones() as usize)
    }

    pub fn labels(&self) -> Vec<&'static str> {
        self.iter().map(ParaphraseType::label).collect()
    }
}

impl FromIterator<ParaphraseType> for TypeSet {
    fn from_iter<I: IntoIterator<Item = ParaphraseType>>(iter: I) -> Self {
        let mut set = TypeSet::empty();
        for t in iter {
            set.insert(t);
        }
        set
    }
}

impl From<ParaphraseType> for TypeSet {
    fn from(t: ParaphraseType) -> Self {
        TypeSet(1 << t.0)
    }
}

impl Serialize for TypeSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for t in self.iter() {
            seq.serialize_element(t.label())?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for TypeSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LabelList;

        impl<'de> Visitor<'de> for LabelList {
            type Value = TypeSet;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a list of paraphrase type labels")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<TypeSet, A::Error> {
                let mut set = TypeSet::empty();
                while let Some(label) = seq.next_element::<String>()? {
                    set.insert(parse_type(&label).map_err(de::Error::custom)?);
                }
                Ok(set)
            }
        }

        deserializer.deserialize_seq(LabelList)
    }
}
