//! Reading and writing judged rollout groups.
//!
//! One JSON document per group:
//!
//! ```json
//! {
//!   "group_id": "prompt-17",
//!   "G": 3,
//!   "K": 2,
//!   "s_max": 10,
//!   "criteria": [
//!     {"id": "no_fabrication", "kind": "hard_rule", "base_weight": 0.5},
//!     {"id": "clarity", "kind": "principle", "base_weight": 0.5}
//!   ],
//!   "scores": [
//!     {"i": 1, "j": 2, "values": [true, 7.5]},
//!     {"i": 2, "j": 1, "values": {"no_fabrication": false, "clarity": 6}}
//!   ]
//! }
//! ```
//!
//! Rollout indices are 1-based. `values` is either a positional array of
//! length `K` or an object keyed by criterion id. Hard-rule entries may be
//! booleans (`true` maps to `s_max`, `false` to 0).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rubric::{Criterion, CriterionKind, Rubric, ScoreTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    pub values: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorDocument {
    pub group_id: String,
    #[serde(rename = "G")]
    pub group_size: usize,
    #[serde(rename = "K")]
    pub num_criteria: usize,
    pub s_max: f64,
    pub criteria: Vec<Criterion>,
    pub scores: Vec<PairRecord>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Average repeated `(i, j)` records (e.g. a pair judged in both
    /// presentation orders) instead of rejecting them.
    pub average_duplicates: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedGroup {
    pub group_id: String,
    pub tensor: ScoreTensor,
    pub rubric: Rubric,
}

fn score_value(v: &Value, kind: CriterionKind, s_max: f64, loc: &str) -> Result<f64> {
    let x = match (v, kind) {
        (Value::Bool(b), CriterionKind::HardRule) => {
            if *b {
                s_max
            } else {
                0.0
            }
        }
        (Value::Bool(_), CriterionKind::Principle) => {
            return Err(Error::parse(loc, "boolean score for a principle criterion"));
        }
        (Value::Number(n), _) => n
            .as_f64()
            .ok_or_else(|| Error::parse(loc, "score is not a finite number"))?,
        _ => return Err(Error::parse(loc, format!("expected a number or boolean, found {v}"))),
    };
    if !(0.0..=s_max).contains(&x) {
        return Err(Error::parse(loc, format!("score {x} outside [0, {s_max}]")));
    }
    if kind == CriterionKind::HardRule && x != 0.0 && x != s_max {
        return Err(Error::parse(
            loc,
            format!("hard-rule score must be 0 or {s_max}, found {x}"),
        ));
    }
    Ok(x)
}

impl TensorDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })
    }

    /// Validates the document and builds the tensor and rubric.
    pub fn into_group(self, options: LoadOptions) -> Result<LoadedGroup> {
        let g = self.group_size;
        let k = self.num_criteria;
        if self.criteria.len() != k {
            return Err(Error::parse(
                "criteria",
                format!("K = {k} but {} criteria listed", self.criteria.len()),
            ));
        }
        if g < 2 {
            return Err(Error::parse("G", format!("group size {g} is below 2")));
        }
        let rubric = Rubric::new(self.criteria, self.s_max)
            .map_err(|e| Error::parse("criteria", e.to_string()))?;
        let s_max = rubric.s_max();

        // (i, j) -> (sums, count)
        let mut cells: BTreeMap<(usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
        for (n, rec) in self.scores.iter().enumerate() {
            let loc = format!("scores[{n}]");
            if rec.i == 0 || rec.j == 0 || rec.i > g || rec.j > g {
                return Err(Error::parse(
                    &loc,
                    format!("pair ({}, {}) outside 1..={g}", rec.i, rec.j),
                ));
            }
            if rec.i == rec.j {
                return Err(Error::parse(&loc, format!("diagonal pair ({}, {})", rec.i, rec.j)));
            }
            let values = match &rec.values {
                Value::Array(items) => {
                    if items.len() != k {
                        return Err(Error::parse(
                            format!("{loc}.values"),
                            format!("expected {k} values, found {}", items.len()),
                        ));
                    }
                    items
                        .iter()
                        .enumerate()
                        .map(|(kk, v)| {
                            score_value(
                                v,
                                rubric.criteria()[kk].kind,
                                s_max,
                                &format!("{loc}.values[{kk}]"),
                            )
                        })
                        .collect::<Result<Vec<f64>>>()?
                }
                Value::Object(map) => {
                    let mut out = vec![f64::NAN; k];
                    for (id, v) in map {
                        let kk = rubric.index_of(id).ok_or_else(|| {
                            Error::parse(format!("{loc}.values"), format!("unknown criterion id {id:?}"))
                        })?;
                        out[kk] = score_value(
                            v,
                            rubric.criteria()[kk].kind,
                            s_max,
                            &format!("{loc}.values.{id}"),
                        )?;
                    }
                    if let Some(missing) = out.iter().position(|x| x.is_nan()) {
                        return Err(Error::parse(
                            format!("{loc}.values"),
                            format!("missing criterion {:?}", rubric.criteria()[missing].id),
                        ));
                    }
                    out
                }
                other => {
                    return Err(Error::parse(
                        format!("{loc}.values"),
                        format!("expected an array or object, found {other}"),
                    ))
                }
            };
            let key = (rec.i - 1, rec.j - 1);
            match cells.get_mut(&key) {
                Some((sums, count)) => {
                    if !options.average_duplicates {
                        return Err(Error::parse(
                            &loc,
                            format!("duplicate record for pair ({}, {})", rec.i, rec.j),
                        ));
                    }
                    sums.iter_mut().zip(&values).for_each(|(s, v)| *s += v);
                    *count += 1;
                }
                None => {
                    cells.insert(key, (values, 1));
                }
            }
        }

        for i in 0..g {
            for j in 0..g {
                if i != j && !cells.contains_key(&(i, j)) {
                    return Err(Error::MissingPair { i: i + 1, j: j + 1 });
                }
            }
        }
        let tensor = ScoreTensor::from_fn(g, k, |i, j, kk| {
            let (sums, count) = &cells[&(i, j)];
            if *count == 1 {
                sums[kk]
            } else {
                sums[kk] / *count as f64
            }
        });
        Ok(LoadedGroup {
            group_id: self.group_id,
            tensor,
            rubric,
        })
    }

    /// Serializes a group with positional numeric values.
    pub fn from_group(group_id: impl Into<String>, tensor: &ScoreTensor, rubric: &Rubric) -> Self {
        let scores = tensor
            .pairs()
            .map(|(i, j, s)| PairRecord {
                i: i + 1,
                j: j + 1,
                values: Value::Array(s.iter().map(|&x| Value::from(x)).collect()),
            })
            .collect();
        Self {
            group_id: group_id.into(),
            group_size: tensor.group_size(),
            num_criteria: tensor.num_criteria(),
            s_max: rubric.s_max(),
            criteria: rubric.criteria().to_vec(),
            scores,
        }
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn load_score_tensor(path: impl AsRef<Path>, options: LoadOptions) -> Result<LoadedGroup> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    TensorDocument::from_json(&text)
        .and_then(|doc| doc.into_group(options))
        .map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
}

pub fn write_score_tensor(
    path: impl AsRef<Path>,
    group_id: &str,
    tensor: &ScoreTensor,
    rubric: &Rubric,
) -> Result<()> {
    let doc = TensorDocument::from_group(group_id, tensor, rubric);
    fs::write(path, doc.to_json_pretty()? + "\n")?;
    Ok(())
}
