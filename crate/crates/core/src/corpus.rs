//! Seeded random corpora and their JSON description.
//!
//! A corpus entry is `{dim, modes: [{k, m, family, params}]}`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{multiplicity, ModeFunction, ModeIndex};
use crate::profiles::{make_polyexp, make_power_cutoff, CutoffChi, SmoothProfile};
use crate::quadrature::RadialRule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `p(r) e^{-βr²}`, coefficients as `[re, im]` pairs from degree 0 up.
    Polyexp { coeffs: Vec<[f64; 2]>, beta: f64 },
    /// `r^α χ(r)` with the cutoff plateau `[0, r0]` and support `[0, r1]`.
    PowerCutoff {
        alpha: f64,
        #[serde(default = "default_r0")]
        r0: f64,
        #[serde(default = "default_r1")]
        r1: f64,
    },
}

fn default_r0() -> f64 {
    0.5
}

fn default_r1() -> f64 {
    1.0
}

impl ProfileSpec {
    pub fn build(&self) -> Result<SmoothProfile> {
        match self {
            ProfileSpec::Polyexp { coeffs, beta } => {
                make_polyexp(coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect(), *beta)
            }
            ProfileSpec::PowerCutoff { alpha, r0, r1 } => Ok(make_power_cutoff(*alpha, CutoffChi::new(*r0, *r1)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub k: usize,
    pub m: usize,
    #[serde(flatten)]
    pub profile: ProfileSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub dim: usize,
    pub modes: Vec<ModeSpec>,
}

impl FunctionSpec {
    pub fn build(&self) -> Result<ModeFunction> {
        let mut f = ModeFunction::new(self.dim)?;
        for spec in &self.modes {
            let idx = ModeIndex::new(spec.k, spec.m);
            if f.modes().contains_key(&idx) {
                return Err(Error::config(format!("mode (k = {}, m = {}) listed twice", spec.k, spec.m)));
            }
            f.insert(idx, spec.profile.build()?)?;
        }
        Ok(f)
    }
}

/// A corpus file holds one function or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorpusFile {
    Many(Vec<FunctionSpec>),
    One(FunctionSpec),
}

impl CorpusFile {
    pub fn parse(text: &str) -> Result<Vec<FunctionSpec>> {
        let file: CorpusFile = serde_json::from_str(text).map_err(|e| Error::config(format!("corpus JSON: {e}")))?;
        Ok(match file {
            CorpusFile::Many(v) => v,
            CorpusFile::One(f) => vec![f],
        })
    }
}

/// Parameters of the random corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusParams {
    pub max_degree: usize,
    pub max_modes: usize,
    pub extra_degree: usize,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams { max_degree: 3, max_modes: 4, extra_degree: 3 }
    }
}

/// Lowest power of `r` allowed in corpus profiles: boundary terms of every
/// integration by parts vanish at the origin and all norms are finite.
pub fn lowest_power(n: usize) -> usize {
    match n {
        2 => 2,
        3 | 4 => 1,
        _ => 0,
    }
}

/// `count` random functions in dimension `n`, reproducible from `seed`.
pub fn generate(seed: u64, n: usize, count: usize, params: CorpusParams) -> Result<Vec<FunctionSpec>> {
    if n < 2 {
        return Err(Error::config(format!("dimension must be >= 2, got {n}")));
    }
    if params.max_modes == 0 {
        return Err(Error::config("corpus functions need at least one mode"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    let q0 = lowest_power(n);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let nmodes = rng.gen_range(1..=params.max_modes);
        let mut modes: Vec<ModeSpec> = Vec::with_capacity(nmodes);
        while modes.len() < nmodes {
            let k = rng.gen_range(0..=params.max_degree);
            let m = rng.gen_range(1..=multiplicity(k, n));
            if modes.iter().any(|s| s.k == k && s.m == m) {
                continue;
            }
            let deg = q0 + rng.gen_range(0..=params.extra_degree);
            let mut coeffs = vec![[0.0, 0.0]; deg + 1];
            for c in coeffs.iter_mut().skip(q0) {
                *c = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
            }
            // keep the leading power present so the integrability bookkeeping
            // is exercised at its edge
            if coeffs[q0] == [0.0, 0.0] {
                coeffs[q0] = [1.0, 0.0];
            }
            let beta = rng.gen_range(0.5..=2.0);
            modes.push(ModeSpec { k, m, profile: ProfileSpec::Polyexp { coeffs, beta } });
        }
        out.push(FunctionSpec { dim: n, modes });
    }
    Ok(out)
}

/// Quadrature rule used for corpus functions: thirty panels graded toward
/// the origin from `R = 12`, widths capped at 1/2, sixteen nodes each.
pub fn corpus_rule() -> RadialRule {
    RadialRule::with_panels(0.0, 12.0, 0.5, 16, 30)
        .and_then(|r| r.with_max_width(0.5))
        .expect("static rule parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_reproducible() {
        let a = generate(7, 3, 10, CorpusParams::default()).unwrap();
        let b = generate(7, 3, 10, CorpusParams::default()).unwrap();
        assert_eq!(a, b);
        let c = generate(8, 3, 10, CorpusParams::default()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_functions_respect_bounds() {
        for n in 2..=8 {
            for spec in generate(1, n, 20, CorpusParams::default()).unwrap() {
                assert!((1..=4).contains(&spec.modes.len()));
                for m in &spec.modes {
                    assert!(m.k <= 3 && m.m >= 1 && m.m <= multiplicity(m.k, n));
                }
                let f = spec.build().unwrap();
                assert_eq!(f.len(), spec.modes.len());
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let specs = generate(3, 5, 2, CorpusParams::default()).unwrap();
        let text = serde_json::to_string(&specs).unwrap();
        assert_eq!(CorpusFile::parse(&text).unwrap(), specs);
        let one = r#"{"dim": 3, "modes": [{"k": 1, "m": 2, "family": "power_cutoff", "params": {"alpha": 1.5}}]}"#;
        let parsed = CorpusFile::parse(one).unwrap();
        assert_eq!(parsed.len(), 1);
        assert!(parsed[0].build().is_ok());
        let bad = r#"{"dim": 3, "modes": [], "extra": 1}"#;
        assert!(CorpusFile::parse(bad).is_err());
    }
}
