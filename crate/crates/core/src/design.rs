//! Lobby design space: catalog, mixed-radix indexing, sampling and mutation.
//!
//! A [`DesignConfig`] is six digits (envelope, layout, fixture, three colors).
//! Its index is the mixed-radix number with the envelope as the most
//! significant digit and the last color slot as the least significant.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum DesignError {
    #[error("index {index} out of range (total {total})")]
    IndexOutOfRange { index: u64, total: u64 },
    #[error("invalid design: {0}")]
    InvalidConfig(String),
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),
    #[error("design space size overflows u64")]
    Overflow,
    #[error("catalog I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DesignError>;

const PALETTE: [&str; 14] = [
    "white", "ivory", "sand", "terracotta", "brick red", "mustard", "olive", "sage", "teal", "sky blue",
    "navy", "lavender", "charcoal", "black",
];
const SLOT_NAMES: [&str; 3] = ["walls", "floor", "furniture"];

/// Human-readable labels per category. The counts are the label-list lengths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub envelopes: Vec<String>,
    pub layouts: Vec<String>,
    pub fixtures: Vec<String>,
    pub palette: Vec<String>,
    pub color_slots: Vec<String>,
}

impl Default for Catalog {
    fn default() -> Self {
        let numbered = |prefix: &str, n: usize| (1..=n).map(|i| format!("{prefix} {i}")).collect();
        Self {
            envelopes: numbered("Envelope", 31),
            layouts: numbered("Layout", 21),
            fixtures: numbered("Fixture", 20),
            palette: PALETTE.iter().map(|s| s.to_string()).collect(),
            color_slots: SLOT_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Catalog {
    /// Catalog with generic labels and the given category sizes.
    pub fn with_counts(envelopes: usize, layouts: usize, fixtures: usize, palette: usize, slots: usize) -> Self {
        let numbered = |prefix: &str, n: usize| (1..=n).map(|i| format!("{prefix} {i}")).collect();
        Self {
            envelopes: numbered("Envelope", envelopes),
            layouts: numbered("Layout", layouts),
            fixtures: numbered("Fixture", fixtures),
            palette: numbered("Color", palette),
            color_slots: numbered("Slot", slots),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let catalog: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("envelopes", self.envelopes.len()),
            ("layouts", self.layouts.len()),
            ("fixtures", self.fixtures.len()),
            ("palette", self.palette.len()),
        ] {
            if n == 0 {
                return Err(DesignError::InvalidCatalog(format!("{name} is empty")));
            }
        }
        self.total_combinations().map(|_| ())
    }

    /// Digit radices, most significant first.
    fn radices(&self) -> Vec<u64> {
        let mut r = vec![self.envelopes.len() as u64, self.layouts.len() as u64, self.fixtures.len() as u64];
        r.extend(std::iter::repeat_n(self.palette.len() as u64, self.color_slots.len()));
        r
    }

    /// `envelopes × layouts × fixtures × palette^slots`, checked.
    pub fn total_combinations(&self) -> Result<u64> {
        self.radices()
            .into_iter()
            .try_fold(1u64, |acc, r| acc.checked_mul(r))
            .ok_or(DesignError::Overflow)
    }

    pub fn index_to_config(&self, index: u64) -> Result<DesignConfig> {
        let total = self.total_combinations()?;
        if index >= total {
            return Err(DesignError::IndexOutOfRange { index, total });
        }
        let radices = self.radices();
        let mut digits = vec![0usize; radices.len()];
        let mut rest = index;
        for (d, r) in digits.iter_mut().zip(&radices).rev() {
            *d = (rest % r) as usize;
            rest /= r;
        }
        Ok(DesignConfig { envelope: digits[0], layout: digits[1], fixture: digits[2], colors: digits[3..].to_vec() })
    }

    pub fn config_to_index(&self, config: &DesignConfig) -> Result<u64> {
        self.check(config)?;
        // checked in validate; every partial product is below the total
        Ok(config.digits().iter().zip(self.radices()).fold(0u64, |acc, (&d, r)| acc * r + d as u64))
    }

    pub fn check(&self, config: &DesignConfig) -> Result<()> {
        self.total_combinations()?;
        if config.colors.len() != self.color_slots.len() {
            return Err(DesignError::InvalidConfig(format!(
                "{} colors for {} slots",
                config.colors.len(),
                self.color_slots.len()
            )));
        }
        for (field, (d, r)) in FIELD_NAMES.iter().zip(config.digits().into_iter().zip(self.radices())) {
            if d as u64 >= r {
                return Err(DesignError::InvalidConfig(format!("{field} = {d} outside 0..{r}")));
            }
        }
        Ok(())
    }

    /// Uniform draw over the whole space.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DesignConfig> {
        let total = self.total_combinations()?;
        self.index_to_config(rng.random_range(0..total))
    }

    fn domain(&self, component: Component) -> Result<usize> {
        Ok(match component {
            Component::Envelope => self.envelopes.len(),
            Component::Layout => self.layouts.len(),
            Component::Fixture => self.fixtures.len(),
            Component::Color(slot) if slot < self.color_slots.len() => self.palette.len(),
            Component::Color(slot) => {
                return Err(DesignError::InvalidConfig(format!("no color slot {slot}")));
            }
        })
    }

    /// Replaces one component with a uniformly drawn different value. A
    /// component with a single option is returned unchanged.
    pub fn mutate<R: Rng + ?Sized>(&self, config: &DesignConfig, component: Component, rng: &mut R) -> Result<DesignConfig> {
        self.check(config)?;
        let n = self.domain(component)?;
        let mut out = config.clone();
        if n < 2 {
            tracing::warn!(?component, "component has a single option; design unchanged");
            return Ok(out);
        }
        let slot = match component {
            Component::Envelope => &mut out.envelope,
            Component::Layout => &mut out.layout,
            Component::Fixture => &mut out.fixture,
            Component::Color(s) => &mut out.colors[s],
        };
        let draw = rng.random_range(0..n - 1);
        *slot = if draw >= *slot { draw + 1 } else { draw };
        Ok(out)
    }

    pub fn describe(&self, config: &DesignConfig) -> Result<DesignDescription> {
        self.check(config)?;
        Ok(DesignDescription {
            index: self.config_to_index(config)?,
            envelope: self.envelopes[config.envelope].clone(),
            layout: self.layouts[config.layout].clone(),
            fixture: self.fixtures[config.fixture].clone(),
            colors: self
                .color_slots
                .iter()
                .zip(&config.colors)
                .map(|(slot, &c)| (slot.clone(), self.palette[c].clone()))
                .collect(),
        })
    }
}

const FIELD_NAMES: [&str; 6] = ["envelope", "layout", "fixture", "color 0", "color 1", "color 2"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DesignConfig {
    pub envelope: usize,
    pub layout: usize,
    pub fixture: usize,
    pub colors: Vec<usize>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self { envelope: 0, layout: 0, fixture: 0, colors: vec![0; 3] }
    }
}

impl DesignConfig {
    pub fn new(envelope: usize, layout: usize, fixture: usize, colors: [usize; 3]) -> Self {
        Self { envelope, layout, fixture, colors: colors.to_vec() }
    }

    pub fn digits(&self) -> Vec<usize> {
        let mut d = vec![self.envelope, self.layout, self.fixture];
        d.extend(&self.colors);
        d
    }

    /// Number of differing fields.
    pub fn hamming(&self, other: &Self) -> usize {
        let (a, b) = (self.digits(), other.digits());
        a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len())
    }
}

impl fmt::Display for DesignConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{:?})", self.envelope, self.layout, self.fixture, self.colors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Envelope,
    Layout,
    Fixture,
    Color(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDescription {
    pub index: u64,
    pub envelope: String,
    pub layout: String,
    pub fixture: String,
    /// (slot name, color name)
    pub colors: Vec<(String, String)>,
}
