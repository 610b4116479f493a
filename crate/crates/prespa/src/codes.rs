//! T4C code words, logical encodings, cat states and photon-number moments.

use crate::error::{Error, Result};
use crate::qalg::{r, CVec, HilbertSpace, StateVector, C64};
use serde::{Deserialize, Serialize};

/// Real nonnegative amplitudes of |0_L⟩ = c1|1⟩ + c5|5⟩ and |1_L⟩ = c3|3⟩ + c7|7⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct CodeWords {
    pub c1: f64,
    pub c3: f64,
    pub c5: f64,
    pub c7: f64,
}

impl From<[f64; 4]> for CodeWords {
    fn from(v: [f64; 4]) -> Self {
        Self { c1: v[0], c3: v[1], c5: v[2], c7: v[3] }
    }
}

impl From<CodeWords> for [f64; 4] {
    fn from(c: CodeWords) -> Self {
        [c.c1, c.c3, c.c5, c.c7]
    }
}

impl CodeWords {
    pub fn new(c1: f64, c3: f64, c5: f64, c7: f64) -> Result<Self> {
        let cw = Self { c1, c3, c5, c7 };
        cw.validate()?;
        Ok(cw)
    }

    /// Amplitudes (√0.35, √0.9, √0.65, √0.1) used in the experiment.
    pub fn experimental() -> Self {
        Self { c1: 0.35f64.sqrt(), c3: 0.9f64.sqrt(), c5: 0.65f64.sqrt(), c7: 0.1f64.sqrt() }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c1, self.c3, self.c5, self.c7];
        if all.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidInput(format!("code-word amplitudes must be nonnegative: {all:?}")));
        }
        let n0 = self.c1 * self.c1 + self.c5 * self.c5;
        let n1 = self.c3 * self.c3 + self.c7 * self.c7;
        if (n0 - 1.0).abs() > 1e-12 || (n1 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("code words not normalized: {n0}, {n1}")));
        }
        Ok(())
    }

    /// Fock amplitudes of |0_L⟩ as (level, amplitude) pairs.
    pub fn zero_support(&self) -> [(usize, f64); 2] {
        [(1, self.c1), (5, self.c5)]
    }

    pub fn one_support(&self) -> [(usize, f64); 2] {
        [(3, self.c3), (7, self.c7)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalAmplitudes {
    pub x: C64,
    pub y: C64,
}

impl LogicalAmplitudes {
    pub fn new(x: C64, y: C64) -> Result<Self> {
        let n = x.norm_sqr() + y.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("logical amplitudes have norm² {n}")));
        }
        Ok(Self { x, y })
    }

    /// Normalizes an arbitrary nonzero pair.
    pub fn normalized(x: C64, y: C64) -> Result<Self> {
        let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
        if !(n > 0.0) {
            return Err(Error::InvalidInput("zero logical state".into()));
        }
        Ok(Self { x: x / n, y: y / n })
    }
}

/// The six Bloch-sphere cardinal points, in the order +Z, −Z, +X, −X, +Y, −Y.
pub fn cardinal_states() -> [(&'static str, LogicalAmplitudes); 6] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let la = |x: C64, y: C64| LogicalAmplitudes { x, y };
    [
        ("pZ", la(r(1.0), r(0.0))),
        ("mZ", la(r(0.0), r(1.0))),
        ("pX", la(r(h), r(h))),
        ("mX", la(r(h), r(-h))),
        ("pY", la(r(h), C64::new(0.0, h))),
        ("mY", la(r(h), C64::new(0.0, -h))),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatParams {
    pub alpha: C64,
    pub parity_sign: i8,
}

fn check_dim(dim: usize) -> Result<HilbertSpace> {
    if dim < 8 {
        return Err(Error::InvalidDimension(format!("cavity truncation {dim} < 8 cannot hold the code words")));
    }
    HilbertSpace::single(dim)
}

pub fn t4c_words(cw: &CodeWords, dim: usize) -> Result<(StateVector, StateVector)> {
    let space = check_dim(dim)?;
    let mut z = CVec::zeros(dim);
    let mut o = CVec::zeros(dim);
    for (n, a) in cw.zero_support() {
        z[n] = r(a);
    }
    for (n, a) in cw.one_support() {
        o[n] = r(a);
    }
    Ok((StateVector::new(space.clone(), z)?, StateVector::new(space, o)?))
}

/// Closed-form solution of normalization plus equal first and second
/// photon-number moments: with a = c1², b = c3² the conditions reduce to
/// b = a + 1/2 and 16a = 4.
pub fn optimal_codewords() -> CodeWords {
    let a = 0.25f64;
    let b = a + 0.5;
    CodeWords { c1: a.sqrt(), c3: b.sqrt(), c5: (1.0 - a).sqrt(), c7: (1.0 - b).sqrt() }
}

pub fn encode(cw: &CodeWords, xy: &LogicalAmplitudes, dim: usize) -> Result<StateVector> {
    let (z, o) = t4c_words(cw, dim)?;
    let amps = z.amps * xy.x + o.amps * xy.y;
    StateVector::new(z.space, amps)?.normalized()
}

pub fn cat_state(p: &CatParams, dim: usize) -> Result<StateVector> {
    if p.parity_sign != 1 && p.parity_sign != -1 {
        return Err(Error::InvalidInput("parity sign must be ±1".into()));
    }
    if p.alpha.norm_sqr() >= dim as f64 / 3.0 {
        return Err(Error::InvalidInput(format!("|alpha|² = {} too large for truncation {dim}", p.alpha.norm_sqr())));
    }
    let space = HilbertSpace::single(dim)?;
    let sign = p.parity_sign as f64;
    // Unnormalized Fock amplitudes α^n/√n! (1 − sign·(−1)^n); the e^{−|α|²/2}
    // prefactor cancels in the normalization.
    let mut amps = CVec::zeros(dim);
    let mut term = r(1.0);
    let mut tail_check = 0.0;
    for n in 0..dim {
        if n > 0 {
            term = term * p.alpha / (n as f64).sqrt();
        }
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        amps[n] = term * (1.0 - sign * parity);
        tail_check += term.norm_sqr();
    }
    let defect = 1.0 - tail_check * (-p.alpha.norm_sqr()).exp();
    if defect > 1e-6 {
        return Err(Error::Truncation { defect });
    }
    if p.alpha.norm() == 0.0 {
        let mut v = CVec::zeros(dim);
        v[if p.parity_sign > 0 { 1 } else { 0 }] = r(1.0);
        return StateVector::new(space, v);
    }
    StateVector::new(space, amps)?.normalized()
}

/// (⟨n⟩ of |0_L⟩, ⟨n⟩ of |1_L⟩, ⟨n²⟩ of |0_L⟩, ⟨n²⟩ of |1_L⟩)
pub fn cavity_moments(cw: &CodeWords) -> (f64, f64, f64, f64) {
    let m = |support: [(usize, f64); 2], power: i32| -> f64 {
        support.iter().map(|&(n, a)| a * a * (n as f64).powi(power)).sum()
    };
    (m(cw.zero_support(), 1), m(cw.one_support(), 1), m(cw.zero_support(), 2), m(cw.one_support(), 2))
}

/// Mean photon number of a cavity state.
pub fn mean_photon_number(psi: &StateVector) -> f64 {
    psi.amps.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum()
}

/// ⟨P̂⟩ for a cavity state.
pub fn parity_expectation(psi: &StateVector) -> f64 {
    psi.amps
        .iter()
        .enumerate()
        .map(|(n, a)| if n % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// Coherent state |α⟩ from its Fock series.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<StateVector> {
    let space = HilbertSpace::single(dim)?;
    let mut amps = CVec::zeros(dim);
    let mut term = r((-alpha.norm_sqr() / 2.0).exp());
    for n in 0..dim {
        if n > 0 {
            term = term * alpha / (n as f64).sqrt();
        }
        amps[n] = term;
    }
    StateVector::new(space, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qalg::{c, fock_operators};
    use proptest::prelude::*;

    #[test]
    fn optimum_is_exact() {
        let cw = optimal_codewords();
        assert_eq!(cw.c1, 0.5);
        assert_eq!(cw.c7, 0.5);
        assert!((cw.c3 - 3f64.sqrt() / 2.0).abs() < 1e-16);
        assert!((cw.c5 - 3f64.sqrt() / 2.0).abs() < 1e-16);
        let (n15, n37, m15, m37) = cavity_moments(&cw);
        assert!((n15 - 4.0).abs() < 1e-12 && (n37 - 4.0).abs() < 1e-12);
        assert!((m15 - 19.0).abs() < 1e-12 && (m37 - 19.0).abs() < 1e-12);
    }

    #[test]
    fn experimental_moments() {
        let (n15, n37, m15, m37) = cavity_moments(&CodeWords::experimental());
        assert!((n15 - 3.6).abs() < 1e-12);
        assert!((n37 - 3.4).abs() < 1e-12);
        assert!((m15 - 16.6).abs() < 1e-12);
        assert!((m37 - 13.0).abs() < 1e-12);
        let degenerate = CodeWords { c1: 1.0, c3: 1.0, c5: 0.0, c7: 0.0 };
        assert_eq!(cavity_moments(&degenerate), (1.0, 3.0, 1.0, 9.0));
    }

    #[test]
    fn words_are_orthogonal_and_normalized() {
        let (z, o) = t4c_words(&CodeWords::experimental(), 10).unwrap();
        assert_eq!(z.inner(&o), c(0.0, 0.0));
        assert!(z.is_normalized() && o.is_normalized());
        assert!(t4c_words(&CodeWords::experimental(), 7).is_err());
    }

    #[test]
    fn encode_examples() {
        let cw = CodeWords::experimental();
        let z = encode(&cw, &LogicalAmplitudes::new(r(1.0), r(0.0)).unwrap(), 10).unwrap();
        assert_eq!(z, t4c_words(&cw, 10).unwrap().0);
        let states = cardinal_states();
        let px = encode(&cw, &states[2].1, 10).unwrap();
        assert!((parity_expectation(&px) + 1.0).abs() < 1e-14);
        let py = encode(&cw, &states[4].1, 10).unwrap();
        assert!((mean_photon_number(&py) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn cat_parity_and_limits() {
        for &a in &[0.3, 1.0, 1.6, 2.5] {
            for &s in &[1i8, -1] {
                let cat = cat_state(&CatParams { alpha: c(a, 0.2), parity_sign: s }, 24).unwrap();
                assert!((parity_expectation(&cat) + s as f64).abs() < 1e-10);
            }
        }
        let tiny = cat_state(&CatParams { alpha: c(1e-4, 0.0), parity_sign: 1 }, 10).unwrap();
        assert!((tiny.amps[1].norm() - 1.0).abs() < 1e-7);
        let odd = cat_state(&CatParams { alpha: c(1.2, 0.0), parity_sign: 1 }, 16).unwrap();
        assert!(odd.amps.iter().step_by(2).all(|a| a.norm() == 0.0));
        assert!(cat_state(&CatParams { alpha: c(3.0, 0.0), parity_sign: 1 }, 24).is_err());
    }

    #[test]
    fn rotated_cat_overlap_follows_the_law() {
        // |⟨C⁻_{iα}|C⁻_α⟩| = |sin|α|²| / sinh|α|², i.e. ∝ e^{−|α|²} sin|α|² for large α.
        let a2 = 3.5f64;
        let alpha = c(a2.sqrt(), 0.0);
        let p = cat_state(&CatParams { alpha, parity_sign: 1 }, 40).unwrap();
        let q = cat_state(&CatParams { alpha: alpha * c(0.0, 1.0), parity_sign: 1 }, 40).unwrap();
        let overlap = q.inner(&p).norm();
        let law = a2.sin().abs() / a2.sinh();
        assert!((overlap - law).abs() < 1e-10, "{overlap} vs {law}");
    }

    #[test]
    fn parity_operator_matches_helper() {
        let f = fock_operators(24).unwrap();
        let cat = cat_state(&CatParams { alpha: c(1.3, -0.4), parity_sign: -1 }, 24).unwrap();
        assert!((cat.expect(&f.parity.mat).re - parity_expectation(&cat)).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn encode_is_normalized(theta in 0.0..std::f64::consts::PI, phi in 0.0..(2.0 * std::f64::consts::PI)) {
            let xy = LogicalAmplitudes::new(r((theta / 2.0).cos()), C64::from_polar((theta / 2.0).sin(), phi)).unwrap();
            for cw in [CodeWords::experimental(), optimal_codewords()] {
                let psi = encode(&cw, &xy, 12).unwrap();
                prop_assert!((psi.amps.norm_squared() - 1.0).abs() < 1e-12);
            }
        }
    }
}
