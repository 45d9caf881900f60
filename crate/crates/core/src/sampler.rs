//! Reproducible sample paths.
//!
//! Symbols are drawn by inverse CDF in alphabet order from a ChaCha20
//! stream seeded with [`ChaCha20Rng::seed_from_u64`]. Finite models start
//! from the stationary law of their first `h` symbols; the comb starts from
//! the past `1` and discards a burn-in.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::analysis::stationary_law;
use crate::error::{Error, Result};
use crate::model::{Model, ModelSpec};
use crate::tree::ContextOracle;

/// Name of the generator recorded in provenance.
pub const RNG_NAME: &str = "chacha20";

/// Smallest burn-in accepted for models without a stationary start.
pub const MIN_BURN_IN: usize = 10_000;

/// Where a sample came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: ModelSpec,
    pub n: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub rng: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    alphabet: Alphabet,
    symbols: Vec<u8>,
    provenance: Option<Provenance>,
}

impl SamplePath {
    pub fn new(alphabet: Alphabet, symbols: Vec<u8>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidConfig(
                "a sample needs at least one symbol".into(),
            ));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s as usize >= alphabet.len()) {
            return Err(Error::InvalidModel(format!(
                "symbol index {s} out of range"
            )));
        }
        Ok(Self {
            alphabet,
            symbols,
            provenance: None,
        })
    }

    /// Parses a sample line (trailing whitespace ignored).
    pub fn parse(alphabet: Alphabet, text: &str) -> Result<Self> {
        let symbols = alphabet.encode(text.trim_end())?;
        Self::new(alphabet, symbols)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn render(&self) -> String {
        self.alphabet.render(&self.symbols)
    }

    /// Writes the sample as one newline-terminated line, and its provenance
    /// (if any) to [`sidecar_path`].
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut line = self.render();
        line.push('\n');
        std::fs::write(path, line)?;
        if let Some(p) = &self.provenance {
            std::fs::write(sidecar_path(path), serde_json::to_string_pretty(p)? + "\n")?;
        }
        Ok(())
    }
}

/// `<sample>.json`.
pub fn sidecar_path(sample: &Path) -> PathBuf {
    let mut s = sample.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Reads the provenance sidecar of `sample` if it exists.
pub fn read_sidecar(sample: &Path) -> Result<Option<Provenance>> {
    let path = sidecar_path(sample);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&std::fs::read_to_string(path)?)?))
}

/// splitmix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `replicate` at grid point `n_index`.
pub fn child_seed(master: u64, n_index: u64, replicate: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ n_index) ^ replicate)
}

/// A model prepared for repeated sampling.
#[derive(Clone, Debug)]
pub struct Sampler<'m> {
    model: &'m Model,
    /// Cumulative stationary law of the first `h` symbols (finite models).
    start_cdf: Option<Vec<f64>>,
}

impl<'m> Sampler<'m> {
    pub fn new(model: &'m Model) -> Result<Self> {
        let start_cdf = match model {
            Model::Finite(m) if m.height() > 0 => {
                let law = stationary_law(m)?;
                let mut acc = 0.0;
                Some(
                    law.probs
                        .iter()
                        .map(|p| {
                            acc += p;
                            acc
                        })
                        .collect(),
                )
            }
            _ => None,
        };
        Ok(Self { model, start_cdf })
    }

    /// `x_0..x_{n−1}`. `burn_in` is ignored for finite models.
    pub fn sample(&self, n: usize, seed: u64, burn_in: usize) -> Result<SamplePath> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "sample length must be at least 1".into(),
            ));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (mut buf, skip, burn_in) = match (self.model, &self.start_cdf) {
            (Model::Finite(m), Some(cdf)) => {
                let h = m.height();
                let k = m.alphabet().len();
                let mut state = draw(cdf, rng.gen());
                let mut start = vec![0u8; h];
                for slot in start.iter_mut().rev() {
                    *slot = (state % k) as u8;
                    state /= k;
                }
                (start, 0, 0)
            }
            (Model::Finite(_), None) => (Vec::new(), 0, 0),
            (Model::Comb(_), _) => {
                if burn_in < MIN_BURN_IN {
                    return Err(Error::InvalidConfig(format!(
                        "burn-in {burn_in} is below the minimum {MIN_BURN_IN}"
                    )));
                }
                (vec![1u8], 1 + burn_in, burn_in)
            }
        };
        let total = skip + n;
        buf.reserve(total.saturating_sub(buf.len()));
        let mut cdf = Vec::with_capacity(self.model.alphabet().len());
        while buf.len() < total {
            let m = self
                .model
                .lookup(&buf)
                .ok_or_else(|| Error::NeedMorePast(self.model.alphabet().render(&buf)))?;
            cdf.clear();
            let mut acc = 0.0;
            cdf.extend(m.row.iter().map(|p| {
                acc += p;
                acc
            }));
            buf.push(draw(&cdf, rng.gen()) as u8);
        }
        buf.drain(..skip);
        buf.truncate(n);
        let path = SamplePath::new(self.model.alphabet().clone(), buf)?;
        Ok(path.with_provenance(Provenance {
            model: self.model.to_spec(),
            n,
            seed,
            burn_in,
            rng: RNG_NAME.into(),
        }))
    }
}

/// First index whose cumulative weight exceeds `u`; rounding slack falls on
/// the last index with positive weight.
fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or_else(|| {
        let mut last = cdf.len() - 1;
        while last > 0 && cdf[last] == cdf[last - 1] {
            last -= 1;
        }
        last
    })
}

/// One-shot [`Sampler::sample`].
pub fn sample_path(model: &Model, n: usize, seed: u64, burn_in: usize) -> Result<SamplePath> {
    Sampler::new(model)?.sample(n, seed, burn_in)
}
