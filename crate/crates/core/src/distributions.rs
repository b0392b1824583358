//! Admissible entry laws: centered, unit-variance, subgaussian.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::normal_cdf;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Finite law given by `(value, probability)` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    atoms: Vec<(f64, f64)>,
    symmetric: bool,
}

impl DiscreteLaw {
    /// Validates normalization: probabilities sum to 1 within 1e-12 and the
    /// law has mean 0 and variance 1 within 1e-9.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::config("discrete law needs at least one atom"));
        }
        if atoms.iter().any(|&(v, p)| !v.is_finite() || !p.is_finite() || p <= 0.0) {
            return Err(Error::config("discrete atoms need finite values and positive probabilities"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let mean: f64 = atoms.iter().map(|(v, p)| v * p).sum();
        let second: f64 = atoms.iter().map(|(v, p)| v * v * p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!("discrete probabilities sum to {total}, not 1")));
        }
        if mean.abs() > 1e-9 || (second - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "discrete law must have mean 0 and variance 1 (got mean {mean}, second moment {second})"
            )));
        }
        let symmetric = atoms.iter().all(|&(v, p)| {
            atoms
                .iter()
                .any(|&(w, q)| (v + w).abs() <= 1e-12 && (p - q).abs() <= 1e-12)
        });
        Ok(Self { atoms, symmetric })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// Law of a single matrix entry.
#[derive(Debug, Clone, PartialEq)]
pub enum EntryDistribution {
    /// ±1 with probability ½ each.
    Rademacher,
    Gaussian,
    /// Uniform on `[-√3, √3]`.
    UniformSym,
    Discrete(DiscreteLaw),
}

impl EntryDistribution {
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            Self::Rademacher => {
                if rng.coin() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::Gaussian => rng.standard_normal(),
            Self::UniformSym => SQRT3 * (2.0 * rng.uniform() - 1.0),
            Self::Discrete(law) => {
                let u = rng.uniform();
                let mut acc = 0.0;
                for &(v, p) in &law.atoms {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                law.atoms[law.atoms.len() - 1].0
            }
        }
    }

    /// Real characteristic function: `E cos(βt)` for symmetric laws, the
    /// modulus `|E exp(iβt)|` otherwise.
    pub fn char_fn(&self, t: f64) -> f64 {
        match self {
            Self::Rademacher => t.cos(),
            Self::Gaussian => (-0.5 * t * t).exp(),
            Self::UniformSym => {
                let u = SQRT3 * t;
                if u.abs() < 1e-8 {
                    1.0 - u * u / 6.0
                } else {
                    u.sin() / u
                }
            }
            Self::Discrete(law) => {
                let re: f64 = law.atoms.iter().map(|(v, p)| p * (v * t).cos()).sum();
                if law.symmetric {
                    re
                } else {
                    let im: f64 = law.atoms.iter().map(|(v, p)| p * (v * t).sin()).sum();
                    re.hypot(im)
                }
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::Discrete(law) => law.symmetric,
            _ => true,
        }
    }

    /// Atoms of a finite-support law, `None` for continuous laws.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            Self::Discrete(law) => Some(law.atoms.clone()),
            _ => None,
        }
    }

    /// `max |β|` over the support; infinite for the Gaussian.
    pub fn support_radius(&self) -> f64 {
        match self {
            Self::Rademacher => 1.0,
            Self::Gaussian => f64::INFINITY,
            Self::UniformSym => SQRT3,
            Self::Discrete(law) => law.atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max),
        }
    }

    /// Exact absolute moment `E|β|^p`.
    pub fn abs_moment(&self, p: f64) -> f64 {
        match self {
            Self::Rademacher => 1.0,
            Self::Gaussian => {
                // 2^{p/2} Γ((p+1)/2) / √π
                (0.5 * p * std::f64::consts::LN_2 + ln_gamma(0.5 * (p + 1.0))
                    - 0.5 * std::f64::consts::PI.ln())
                .exp()
            }
            Self::UniformSym => SQRT3.powf(p) / (p + 1.0),
            Self::Discrete(law) => law.atoms.iter().map(|(v, w)| w * v.abs().powf(p)).sum(),
        }
    }

    /// Distribution function `P(β ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian => normal_cdf(x),
            Self::UniformSym => ((x + SQRT3) / (2.0 * SQRT3)).clamp(0.0, 1.0),
            _ => self
                .atoms()
                .expect("finite support")
                .iter()
                .filter(|a| a.0 <= x)
                .map(|a| a.1)
                .sum(),
        }
    }

    /// Law of `β - β'` for an independent copy `β'`, as merged atoms sorted
    /// by value. Finite-support laws only.
    pub fn difference_atoms(&self) -> Option<Vec<(f64, f64)>> {
        let atoms = self.atoms()?;
        let mut diffs: Vec<(f64, f64)> = Vec::with_capacity(atoms.len() * atoms.len());
        for &(v, p) in &atoms {
            for &(w, q) in &atoms {
                diffs.push((v - w, p * q));
            }
        }
        diffs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(diffs.len());
        for (d, p) in diffs {
            match merged.last_mut() {
                Some(last) if (last.0 - d).abs() <= 1e-12 => last.1 += p,
                _ => merged.push((d, p)),
            }
        }
        Some(merged)
    }
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Rademacher => f.write_str("rademacher"),
            Self::Gaussian => f.write_str("gaussian"),
            Self::UniformSym => f.write_str("uniform"),
            Self::Discrete(law) => {
                f.write_str("discrete:")?;
                for (i, (v, p)) in law.atoms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}:{p}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for EntryDistribution {
    type Err = Error;

    /// `rademacher`, `gaussian`, `uniform` or `discrete:v1:p1,v2:p2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |detail: String| Error::Parse {
            what: "distribution",
            detail,
        };
        match s.trim() {
            "rademacher" => Ok(Self::Rademacher),
            "gaussian" => Ok(Self::Gaussian),
            "uniform" => Ok(Self::UniformSym),
            other => {
                let body = other
                    .strip_prefix("discrete:")
                    .ok_or_else(|| parse_err(format!("unknown law `{other}`")))?;
                let mut atoms = Vec::new();
                for pair in body.split(',') {
                    let (v, p) = pair
                        .split_once(':')
                        .ok_or_else(|| parse_err(format!("atom `{pair}` is not value:prob")))?;
                    let v: f64 = v.trim().parse().map_err(|e| parse_err(format!("{v}: {e}")))?;
                    let p: f64 = p.trim().parse().map_err(|e| parse_err(format!("{p}: {e}")))?;
                    atoms.push((v, p));
                }
                Ok(Self::Discrete(DiscreteLaw::new(atoms)?))
            }
        }
    }
}

impl Serialize for EntryDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntryDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One line of the moment-growth diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRatio {
    pub p: u32,
    /// `(E|β|^p)^{1/p} / √p`, estimated.
    pub ratio: f64,
    pub std_err: f64,
}

/// Monte Carlo estimate of `(E|β|^p)^{1/p}/√p` for even `p ≤ p_max`.
///
/// Bounded ratios across `p` are the operational signature of a
/// subgaussian law. `p_max` above 12 is rejected because the empirical
/// moments become dominated by a handful of draws.
pub fn subgaussian_diagnostic(
    dist: &EntryDistribution,
    samples: usize,
    p_max: u32,
    rng: &mut RngStream,
) -> Result<Vec<MomentRatio>> {
    if p_max > 12 {
        return Err(Error::config(format!("p_max = {p_max} exceeds 12")));
    }
    if samples < 10_000 {
        return Err(Error::config(format!("need at least 10^4 samples, got {samples}")));
    }
    let draws: Vec<f64> = (0..samples).map(|_| dist.sample(rng)).collect();
    let n = samples as f64;
    let report = (2..=p_max)
        .step_by(2)
        .map(|p| {
            let pf = f64::from(p);
            let powers: Vec<f64> = draws.iter().map(|b| b.abs().powi(p as i32)).collect();
            let m = powers.iter().sum::<f64>() / n;
            let var = powers.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
            let se_m = (var / n).sqrt();
            let ratio = m.powf(1.0 / pf) / pf.sqrt();
            // delta method: d(m^{1/p})/dm = m^{1/p - 1}/p
            let std_err = if m > 0.0 {
                m.powf(1.0 / pf - 1.0) / pf * se_m / pf.sqrt()
            } else {
                0.0
            };
            MomentRatio { p, ratio, std_err }
        })
        .collect();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn laws() -> Vec<EntryDistribution> {
        vec![
            EntryDistribution::Rademacher,
            EntryDistribution::Gaussian,
            EntryDistribution::UniformSym,
            "discrete:-2:0.2,0.5:0.8".parse().unwrap(),
        ]
    }

    #[test]
    fn supports() {
        let mut rng = RngStream::new(1);
        for _ in 0..10_000 {
            let r = EntryDistribution::Rademacher.sample(&mut rng);
            assert!(r == 1.0 || r == -1.0);
            let u = EntryDistribution::UniformSym.sample(&mut rng);
            assert!((-SQRT3..=SQRT3).contains(&u));
        }
        let d: EntryDistribution = "discrete:-2:0.2,0.5:0.8".parse().unwrap();
        for _ in 0..1000 {
            let v = d.sample(&mut rng);
            assert!(v == -2.0 || v == 0.5);
        }
    }

    #[test]
    fn char_fn_examples() {
        assert_eq!(EntryDistribution::Rademacher.char_fn(std::f64::consts::PI), -1.0);
        assert_eq!(EntryDistribution::Gaussian.char_fn(0.0), 1.0);
        let uniform = EntryDistribution::UniformSym.char_fn(1.0);
        assert_relative_eq!(uniform, SQRT3.sin() / SQRT3, epsilon = 1e-15);
        // midpoint rule on cos(xt)/(2√3) over [-√3, √3]
        let n = 200_000;
        let h = 2.0 * SQRT3 / n as f64;
        let quad: f64 = (0..n)
            .map(|i| (-SQRT3 + (i as f64 + 0.5) * h).cos() * h / (2.0 * SQRT3))
            .sum();
        assert_relative_eq!(uniform, quad, epsilon = 1e-9);
        assert_relative_eq!(uniform, 0.56986, epsilon = 1e-5);
    }

    #[test]
    fn char_fn_bounded_and_even() {
        let mut rng = RngStream::new(5);
        for law in laws() {
            assert_relative_eq!(law.char_fn(0.0), 1.0, epsilon = 1e-15);
            for _ in 0..10_000 {
                let t = 200.0 * rng.uniform() - 100.0;
                let phi = law.char_fn(t);
                assert!(phi.abs() <= 1.0 + 1e-15, "{law}: |phi({t})| = {phi}");
                assert_eq!(phi, law.char_fn(-t), "{law} not even at {t}");
            }
        }
    }

    #[test]
    fn asymmetric_char_fn_is_modulus() {
        let d: EntryDistribution = "discrete:-2:0.2,0.5:0.8".parse().unwrap();
        assert!(!d.is_symmetric());
        let t = 0.7;
        let re = 0.2 * (-2.0f64 * t).cos() + 0.8 * (0.5f64 * t).cos();
        let im = 0.2 * (-2.0f64 * t).sin() + 0.8 * (0.5f64 * t).sin();
        assert_relative_eq!(d.char_fn(t), (re * re + im * im).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn discrete_validation() {
        assert!("discrete:-1:0.5,1:0.4".parse::<EntryDistribution>().is_err());
        assert!("discrete:0:0.5,2:0.5".parse::<EntryDistribution>().is_err());
        assert!("discrete:-1:0.5,1:0.5".parse::<EntryDistribution>().unwrap().is_symmetric());
        assert!("cauchy".parse::<EntryDistribution>().is_err());
    }

    #[test]
    fn spec_string_round_trip() {
        for law in laws() {
            let back: EntryDistribution = law.to_string().parse().unwrap();
            assert_eq!(back, law);
        }
    }

    #[test]
    fn sample_moments_at_one_million() {
        let n = 1_000_000;
        for (i, law) in laws().into_iter().enumerate() {
            let mut rng = RngStream::new(100 + i as u64);
            let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
            // 4 standard errors; fourth moments are at most 3 here
            assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "{law}: mean {mean}");
            let var_se = ((law.abs_moment(4.0) - 1.0) / n as f64).sqrt();
            assert!((var - 1.0).abs() <= 4.0 * var_se + 1e-12, "{law}: var {var}");
        }
    }

    #[test]
    fn empirical_cdf_matches_analytic() {
        let n = 1_000_000;
        for (i, law) in laws().into_iter().enumerate() {
            let mut rng = RngStream::new(200 + i as u64);
            let mut xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            for q in 1..=20 {
                let point = match law {
                    EntryDistribution::Gaussian => -3.0 + 6.0 * q as f64 / 21.0,
                    EntryDistribution::UniformSym => -SQRT3 + 2.0 * SQRT3 * q as f64 / 21.0,
                    _ => -2.5 + 5.0 * q as f64 / 21.0,
                };
                let emp = xs.partition_point(|&x| x <= point) as f64 / n as f64;
                let p = law.cdf(point);
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((emp - p).abs() <= 3.0 * se + 1e-12, "{law} at {point}: {emp} vs {p}");
            }
        }
    }

    #[test]
    fn moment_diagnostic() {
        let mut rng = RngStream::new(9);
        let rad = subgaussian_diagnostic(&EntryDistribution::Rademacher, 10_000, 12, &mut rng).unwrap();
        assert_eq!(rad.len(), 6);
        for line in &rad {
            assert_relative_eq!(line.ratio, 1.0 / f64::from(line.p).sqrt(), epsilon = 1e-12);
        }
        let gauss = subgaussian_diagnostic(&EntryDistribution::Gaussian, 400_000, 4, &mut rng).unwrap();
        assert!((gauss[0].ratio - 0.5f64.sqrt()).abs() < 4.0 * gauss[0].std_err);
        let expected = 3f64.powf(0.25) / 2.0;
        assert_relative_eq!(expected, 0.658, epsilon = 1e-3);
        assert!((gauss[1].ratio - expected).abs() < 4.0 * gauss[1].std_err);
        assert!(subgaussian_diagnostic(&EntryDistribution::Gaussian, 10_000, 14, &mut rng).is_err());
        assert!(subgaussian_diagnostic(&EntryDistribution::Gaussian, 100, 4, &mut rng).is_err());
    }

    #[test]
    fn exact_abs_moments() {
        assert_relative_eq!(EntryDistribution::Gaussian.abs_moment(2.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(EntryDistribution::Gaussian.abs_moment(4.0), 3.0, epsilon = 1e-12);
        assert_relative_eq!(
            EntryDistribution::Gaussian.abs_moment(3.0),
            2.0 * (2.0 / std::f64::consts::PI).sqrt(),
            epsilon = 1e-12
        );
        assert_relative_eq!(EntryDistribution::UniformSym.abs_moment(2.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn difference_law_of_rademacher() {
        let d = EntryDistribution::Rademacher.difference_atoms().unwrap();
        assert_eq!(d, vec![(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]);
    }
}
