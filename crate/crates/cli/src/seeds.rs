use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

/// An ordered, de-duplicated list of seeds.
///
/// Parsed from comma-separated items, each either a single integer or an
/// inclusive range `a..b` (also accepted as `a..=b`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(Vec<u64>);

impl SeedList {
    pub fn new(seeds: Vec<u64>) -> Result<Self, SeedParseError> {
        let mut out = Vec::with_capacity(seeds.len());
        for s in seeds {
            if !out.contains(&s) {
                out.push(s);
            }
        }
        if out.is_empty() {
            return Err(SeedParseError("empty seed list".into()));
        }
        Ok(Self(out))
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedParseError(String);

impl fmt::Display for SeedParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SeedParseError {}

fn parse_u64(s: &str) -> Result<u64, SeedParseError> {
    s.trim()
        .parse()
        .map_err(|_| SeedParseError(format!("invalid seed {:?}", s.trim())))
}

impl FromStr for SeedList {
    type Err = SeedParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut seeds = Vec::new();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            if let Some((lo, hi)) = item.split_once("..") {
                let lo = parse_u64(lo)?;
                let hi = parse_u64(hi.strip_prefix('=').unwrap_or(hi))?;
                if hi < lo {
                    return Err(SeedParseError(format!("empty range {item:?}")));
                }
                if hi - lo >= 1_000_000 {
                    return Err(SeedParseError(format!("range {item:?} is too long")));
                }
                seeds.extend(lo..=hi);
            } else {
                seeds.push(parse_u64(item)?);
            }
        }
        Self::new(seeds)
    }
}

/// Seeds as written in a config file: `"1..20"` or `[1, 2, 3]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Text(String),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn resolve(&self) -> Result<SeedList, SeedParseError> {
        match self {
            SeedSpec::Text(s) => s.parse(),
            SeedSpec::List(v) => SeedList::new(v.clone()),
        }
    }
}
