//! Bundled example models.

use crate::modelfile::{FileError, LoadedModel, ModelFile};

/// `(name, source)` for every bundled model file; the file name is
/// `<name>.ck`.
pub const FILES: &[(&str, &str)] = &[
    ("umbrella", include_str!("../corpus/umbrella.ck")),
    ("umbrella-variant", include_str!("../corpus/umbrella-variant.ck")),
    ("stalemate", include_str!("../corpus/stalemate.ck")),
    ("stalemate-revisited", include_str!("../corpus/stalemate-revisited.ck")),
    ("police", include_str!("../corpus/police.ck")),
    ("robot", include_str!("../corpus/robot.ck")),
    ("navigation", include_str!("../corpus/navigation.ck")),
    ("forest-fire-conjunctive", include_str!("../corpus/forest-fire-conjunctive.ck")),
    ("forest-fire-disjunctive", include_str!("../corpus/forest-fire-disjunctive.ck")),
    ("rock-throwing", include_str!("../corpus/rock-throwing.ck")),
    ("voting", include_str!("../corpus/voting.ck")),
];

/// Single-world models with an empty relation.
pub const CLASSICAL: &[&str] = &[
    "forest-fire-conjunctive",
    "forest-fire-disjunctive",
    "rock-throwing",
    "voting",
];

pub fn names() -> impl Iterator<Item = &'static str> {
    FILES.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".ck").unwrap_or(name);
    FILES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<LoadedModel, FileError> {
    let src = source(name).ok_or_else(|| FileError::Invalid(format!("no bundled model `{name}`")))?;
    ModelFile::load(src)
}
