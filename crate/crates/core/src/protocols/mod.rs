//! LOCC protocols as ordered step lists, an exact branch-enumerating simulator,
//! the two merging protocols, and the discrimination/decoding applications.

mod apps;
mod build;
mod engine;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{LinearMap, Signature, TOL_NORM};
use crate::measure::KrausFamily;

pub use apps::{decode_superposition, discriminate, DecodeReport, Discrimination};
pub use build::{
    build_elimination, build_measure_and_decode, build_one_way, build_one_way_with, build_two_way, build_two_way_with,
    flag_measurement, flag_fourier_measurement, initial_state, resource_state,
};
pub use engine::{simulate, simulate_from, Branch, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::A => "A",
            Party::B => "B",
        })
    }
}

/// Direction of classical communication used by a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "one-way-AB")]
    OneWayAB,
    #[serde(rename = "one-way-BA")]
    OneWayBA,
    #[serde(rename = "two-way")]
    TwoWay,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::OneWayAB => "one-way-AB",
            Direction::OneWayBA => "one-way-BA",
            Direction::TwoWay => "two-way",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyedEntry<T> {
    pub transcript: Vec<usize>,
    pub value: T,
}

/// A value that is either fixed or selected by earlier measurement outcomes.
///
/// `on` lists the indices (in measurement order) of the outcomes forming the key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Keyed<T> {
    Fixed { value: T },
    ByTranscript { on: Vec<usize>, entries: Vec<KeyedEntry<T>> },
}

impl<T> Keyed<T> {
    pub fn fixed(value: T) -> Self {
        Keyed::Fixed { value }
    }

    pub fn by_transcript(on: Vec<usize>, map: BTreeMap<Vec<usize>, T>) -> Self {
        let entries = map.into_iter().map(|(transcript, value)| KeyedEntry { transcript, value }).collect();
        Keyed::ByTranscript { on, entries }
    }

    pub fn key_indices(&self) -> &[usize] {
        match self {
            Keyed::Fixed { .. } => &[],
            Keyed::ByTranscript { on, .. } => on,
        }
    }

    pub fn values(&self) -> Box<dyn Iterator<Item = &T> + '_> {
        match self {
            Keyed::Fixed { value } => Box::new(std::iter::once(value)),
            Keyed::ByTranscript { entries, .. } => Box::new(entries.iter().map(|e| &e.value)),
        }
    }

    /// The value selected by the outcomes recorded so far.
    pub fn resolve(&self, transcript: &[usize]) -> Result<&T> {
        match self {
            Keyed::Fixed { value } => Ok(value),
            Keyed::ByTranscript { on, entries } => {
                let key = on
                    .iter()
                    .map(|&i| transcript.get(i).copied().ok_or_else(|| Error::MissingKey(transcript.to_vec())))
                    .collect::<Result<Vec<_>>>()?;
                entries
                    .binary_search_by(|e| e.transcript.cmp(&key))
                    .map(|i| &entries[i].value)
                    .map_err(|_| Error::MissingKey(key))
            }
        }
    }
}

/// A local map on the factors `acts_on`, producing the factors `outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LocalOp {
    pub map: LinearMap,
    pub acts_on: Vec<String>,
    pub outputs: Vec<String>,
}

impl LocalOp {
    pub fn new<S: Into<String>, T: Into<String>>(
        map: LinearMap,
        acts_on: impl IntoIterator<Item = S>,
        outputs: impl IntoIterator<Item = T>,
    ) -> Result<Self> {
        let acts_on: Vec<String> = acts_on.into_iter().map(Into::into).collect();
        let outputs: Vec<String> = outputs.into_iter().map(Into::into).collect();
        if map.domain().len() != acts_on.len() || map.codomain().len() != outputs.len() {
            return Err(Error::DimensionMismatch(format!(
                "map {:?} -> {:?} with labels {acts_on:?} -> {outputs:?}",
                map.domain(),
                map.codomain()
            )));
        }
        Ok(LocalOp { map, acts_on, outputs })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum Step {
    Measure { party: Party, family: Keyed<KrausFamily> },
    Correct { party: Party, op: Keyed<LocalOp> },
    /// Sends every outcome known to `from`.
    Message { from: Party, to: Party },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Protocol {
    pub name: String,
    /// Schmidt rank of the consumed maximally entangled resource.
    pub resource_k: usize,
    pub initial_layout: Signature,
    /// Which party holds each initial register; unlisted registers (the reference) belong to nobody.
    pub owners: BTreeMap<String, Party>,
    pub steps: Vec<Step>,
    pub target_labels: Vec<String>,
}

impl Protocol {
    pub fn cost_bits(&self) -> f64 {
        (self.resource_k as f64).log2()
    }

    pub fn classify(&self) -> Direction {
        classify(self)
    }

    /// Checks ownership of every touched register, knowledge of every outcome
    /// used as a key, completeness of measurements and isometry of corrections.
    pub fn validate(&self) -> Result<()> {
        if self.resource_k == 0 {
            return Err(Error::Invalid("resource Schmidt rank must be positive".into()));
        }
        let mut owner: BTreeMap<String, Party> = self.owners.clone();
        for l in owner.keys() {
            if !self.initial_layout.contains(l) {
                return Err(Error::UnknownLabel(l.clone()));
            }
        }
        let mut known: BTreeMap<Party, BTreeSet<usize>> = BTreeMap::new();
        let mut measured = 0usize;
        for step in &self.steps {
            match step {
                Step::Measure { party, family } => {
                    check_keys(*party, family.key_indices(), &known)?;
                    let first = family.values().next().ok_or_else(|| Error::Invalid("empty keyed family".into()))?;
                    for f in family.values() {
                        if f.acts_on() != first.acts_on() || f.outputs() != first.outputs() {
                            return Err(Error::Invalid("keyed families act on different registers".into()));
                        }
                        let (ok, residual) = f.is_complete();
                        if !ok {
                            return Err(Error::IncompleteFamily { residual });
                        }
                    }
                    transfer(&mut owner, *party, first.acts_on(), first.outputs())?;
                    known.entry(*party).or_default().insert(measured);
                    measured += 1;
                }
                Step::Correct { party, op } => {
                    check_keys(*party, op.key_indices(), &known)?;
                    let first = op.values().next().ok_or_else(|| Error::Invalid("empty keyed correction".into()))?;
                    for o in op.values() {
                        if o.acts_on != first.acts_on || o.outputs != first.outputs {
                            return Err(Error::Invalid("keyed corrections act on different registers".into()));
                        }
                        let residual = o.map.isometry_residual();
                        if residual > TOL_NORM {
                            return Err(Error::NotIsometry { residual });
                        }
                    }
                    transfer(&mut owner, *party, &first.acts_on, &first.outputs)?;
                }
                Step::Message { from, to } => {
                    if from == to {
                        return Err(Error::Invalid(format!("party {from} messages itself")));
                    }
                    let sent = known.get(from).cloned().unwrap_or_default();
                    known.entry(*to).or_default().extend(sent);
                }
            }
        }
        Ok(())
    }
}

fn check_keys(party: Party, keys: &[usize], known: &BTreeMap<Party, BTreeSet<usize>>) -> Result<()> {
    for &i in keys {
        if !known.get(&party).is_some_and(|s| s.contains(&i)) {
            return Err(Error::UnknownOutcome { party: party.to_string(), index: i });
        }
    }
    Ok(())
}

fn transfer(owner: &mut BTreeMap<String, Party>, party: Party, inputs: &[String], outputs: &[String]) -> Result<()> {
    for l in inputs {
        match owner.get(l) {
            Some(p) if *p == party => {}
            _ => return Err(Error::NotOwned { party: party.to_string(), label: l.clone() }),
        }
    }
    for l in inputs {
        owner.remove(l);
    }
    for l in outputs {
        if owner.insert(l.clone(), party).is_some() {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

/// One-way from A to B when every message goes that way (including no messages).
pub fn classify(p: &Protocol) -> Direction {
    let mut ab = false;
    let mut ba = false;
    for s in &p.steps {
        if let Step::Message { from, .. } = s {
            match from {
                Party::A => ab = true,
                Party::B => ba = true,
            }
        }
    }
    match (ab, ba) {
        (true, true) => Direction::TwoWay,
        (false, true) => Direction::OneWayBA,
        _ => Direction::OneWayAB,
    }
}
