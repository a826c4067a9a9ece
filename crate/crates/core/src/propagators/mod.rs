//! One-magnon Green functions of the XXZ / XY ring.
//!
//! `G[x'][x](t)` is the amplitude for a single down spin to hop from site `x`
//! to `x'` in time `t`, with the zero-magnon energy and the magnon gap
//! factored out. Sites are 1-based. On a finite ring
//!
//! ```text
//! G[x'][x](t) = (1/N) Σ_l exp(i p (x' - x)) exp(2 i t cos p),   p = 2πl/N
//! ```
//!
//! and on the infinite chain `G[x'][x](t) = i^d J_d(2t)` with `d = x' - x`.

mod bessel;

pub use bessel::{bessel_j, bessel_j_orders, MAX_ORDER};

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::echo::InitialState;
use crate::error::{invalid, Error, Result};
use crate::C64;

/// Site label. Finite rings use `1..=N`; the infinite chain accepts any integer.
pub type Site = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainSize {
    Finite(usize),
    Infinite,
}

/// Chain geometry and couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    size: ChainSize,
    anisotropy: f64,
    magnon_gap: f64,
}

impl ChainSpec {
    /// Periodic ring of `sites` spins with the default magnon gap `2Δ`.
    pub fn finite(sites: usize, anisotropy: f64) -> Result<Self> {
        if sites < 3 {
            return Err(invalid("N", format!("ring needs at least 3 sites, got {sites}")));
        }
        Self::build(ChainSize::Finite(sites), anisotropy)
    }

    pub fn infinite(anisotropy: f64) -> Result<Self> {
        Self::build(ChainSize::Infinite, anisotropy)
    }

    /// Δ = 0 ring, the free flight of the kicked Harper model.
    pub fn xy(sites: usize) -> Result<Self> {
        Self::finite(sites, 0.0)
    }

    fn build(size: ChainSize, anisotropy: f64) -> Result<Self> {
        if !anisotropy.is_finite() {
            return Err(invalid("anisotropy", "must be finite"));
        }
        Ok(Self {
            size,
            anisotropy,
            magnon_gap: 2.0 * anisotropy,
        })
    }

    /// Overrides the zero-to-one-magnon energy offset.
    pub fn with_magnon_gap(mut self, gap: f64) -> Result<Self> {
        if !gap.is_finite() {
            return Err(invalid("magnon_gap", "must be finite"));
        }
        self.magnon_gap = gap;
        Ok(self)
    }

    pub fn size(&self) -> ChainSize {
        self.size
    }

    pub fn sites(&self) -> Option<usize> {
        match self.size {
            ChainSize::Finite(n) => Some(n),
            ChainSize::Infinite => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.size, ChainSize::Finite(_))
    }

    pub fn anisotropy(&self) -> f64 {
        self.anisotropy
    }

    pub fn magnon_gap(&self) -> f64 {
        self.magnon_gap
    }

    /// Ferromagnetic energy `-NΔ/2`; undefined on the infinite chain.
    pub fn ground_energy(&self) -> Option<f64> {
        self.sites().map(|n| -(n as f64) * self.anisotropy / 2.0)
    }

    pub fn check_site(&self, site: Site) -> Result<()> {
        match self.size {
            ChainSize::Finite(n) if site < 1 || site > n as i64 => {
                Err(Error::SiteOutOfRange { site, size: n })
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn require_finite(&self) -> Result<usize> {
        self.sites().ok_or(Error::InfiniteChain)
    }
}

/// Dense table of one-magnon amplitudes, `amplitudes[(x' - 1, x - 1)] = G[x'][x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub chain: ChainSpec,
    pub time: f64,
    pub amplitudes: DMatrix<C64>,
}

impl Propagator {
    pub fn identity(chain: ChainSpec) -> Result<Self> {
        let n = chain.require_finite()?;
        Ok(Self {
            chain,
            time: 0.0,
            amplitudes: DMatrix::identity(n, n),
        })
    }

    pub fn sites(&self) -> usize {
        self.amplitudes.nrows()
    }

    /// `G[to][from]`, 1-based.
    pub fn get(&self, to: Site, from: Site) -> Result<C64> {
        self.chain.check_site(to)?;
        self.chain.check_site(from)?;
        Ok(self.amplitudes[((to - 1) as usize, (from - 1) as usize)])
    }

    /// Amplitudes `G[x][from]` for x = 1..=N.
    pub fn column(&self, from: Site) -> Result<Vec<C64>> {
        self.chain.check_site(from)?;
        Ok(self.amplitudes.column((from - 1) as usize).iter().copied().collect())
    }

    /// `self · other`: evolve by `other` first, then by `self`.
    pub fn then_after(&self, other: &Propagator) -> Result<Propagator> {
        if self.sites() != other.sites() {
            return Err(Error::DimensionMismatch {
                expected: self.sites(),
                got: other.sites(),
            });
        }
        Ok(Propagator {
            chain: self.chain,
            time: self.time + other.time,
            amplitudes: &self.amplitudes * &other.amplitudes,
        })
    }

    /// Largest deviation of a column 2-norm from one.
    pub fn column_norm_deviation(&self) -> f64 {
        self.amplitudes
            .column_iter()
            .map(|c| (c.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from `G[x'][x] = g((x' - x) mod N)`.
    pub fn translation_deviation(&self) -> f64 {
        let n = self.sites();
        let mut worst = 0.0f64;
        for from in 0..n {
            for to in 0..n {
                let d = (to + n - from) % n;
                let reference = self.amplitudes[(d, 0)];
                worst = worst.max((self.amplitudes[(to, from)] - reference).norm());
            }
        }
        worst
    }
}

/// Infinite-chain Green function `i^d J_d(2t)`, `d = x_to - x_from`.
pub fn green_infinite(x_to: Site, x_from: Site, t: f64) -> Result<C64> {
    let d = x_to - x_from;
    let j = bessel_j(d, 2.0 * t)?;
    Ok(i_pow(d) * j)
}

/// Finite-ring Green function from the plane-wave sum.
pub fn green_finite(chain: &ChainSpec, x_to: Site, x_from: Site, t: f64) -> Result<C64> {
    let n = chain.require_finite()?;
    chain.check_site(x_to)?;
    chain.check_site(x_from)?;
    check_time(t)?;
    let d = (x_to - x_from).rem_euclid(n as i64) as usize;
    Ok(RingKernel::new(n, t).amplitude(d))
}

/// Green function in whichever mode `chain` is.
pub fn green(chain: &ChainSpec, x_to: Site, x_from: Site, t: f64) -> Result<C64> {
    match chain.size {
        ChainSize::Finite(_) => green_finite(chain, x_to, x_from, t),
        ChainSize::Infinite => {
            check_time(t)?;
            green_infinite(x_to, x_from, t)
        }
    }
}

/// Column `G[x][from](t)` for every site of a finite ring. O(N²).
pub fn green_column(chain: &ChainSpec, from: Site, t: f64) -> Result<Vec<C64>> {
    let n = chain.require_finite()?;
    chain.check_site(from)?;
    check_time(t)?;
    let g = RingKernel::new(n, t).all();
    let f = (from - 1) as usize;
    Ok((0..n).map(|x| g[(x + n - f) % n]).collect())
}

/// Full table of `green_finite` values, built from the circulant kernel.
pub fn propagator_matrix(chain: &ChainSpec, t: f64) -> Result<Propagator> {
    let n = chain.require_finite()?;
    check_time(t)?;
    let g = RingKernel::new(n, t).all();
    let amplitudes = DMatrix::from_fn(n, n, |to, from| g[(to + n - from) % n]);
    Ok(Propagator {
        chain: *chain,
        time: t,
        amplitudes,
    })
}

/// `α G[m][1](t) + β G[m][r](t)` for the entangled state `α|1⟩ + β|r⟩`.
pub fn combined_k(state: &InitialState, chain: &ChainSpec, m: Site, t: f64) -> Result<C64> {
    match *state {
        InitialState::Entangled { alpha, beta, partner } => {
            chain.check_site(m)?;
            chain.check_site(partner)?;
            Ok(alpha * green(chain, m, 1, t)? + beta * green(chain, m, partner, t)?)
        }
        InitialState::Unentangled { .. } => Err(Error::Usage(
            "combined propagator K needs the entangled initial state".into(),
        )),
    }
}

/// `exp(-i Δ_gap t) G[m][1](t)`: the one-magnon amplitude at `m` measured
/// relative to the zero-magnon component.
pub fn dressed_green(chain: &ChainSpec, m: Site, t: f64) -> Result<C64> {
    chain.check_site(m)?;
    let phase = C64::from_polar(1.0, -chain.magnon_gap * t);
    Ok(phase * green(chain, m, 1, t)?)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be finite, got {t}")))
    }
}

fn i_pow(d: i64) -> C64 {
    match d.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Plane-wave data for one ring size and time.
struct RingKernel {
    n: usize,
    roots: Vec<C64>,
    dispersion: Vec<C64>,
}

impl RingKernel {
    fn new(n: usize, t: f64) -> Self {
        let roots: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
            .collect();
        let dispersion = (1..=n)
            .map(|l| {
                let p = 2.0 * PI * l as f64 / n as f64;
                C64::from_polar(1.0, 2.0 * t * p.cos())
            })
            .collect();
        Self { n, roots, dispersion }
    }

    fn amplitude(&self, d: usize) -> C64 {
        let n = self.n;
        let sum: C64 = self
            .dispersion
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.roots[((i + 1) * d) % n])
            .sum();
        sum / n as f64
    }

    fn all(&self) -> Vec<C64> {
        (0..self.n).map(|d| self.amplitude(d)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::MaxNorm;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn chain_validation() {
        assert!(ChainSpec::finite(2, 1.0).is_err());
        assert!(ChainSpec::finite(3, f64::NAN).is_err());
        let c = ChainSpec::finite(8, 1.0).unwrap();
        assert_eq!(c.magnon_gap(), 2.0);
        assert_eq!(c.ground_energy(), Some(-4.0));
        assert_eq!(ChainSpec::infinite(1.0).unwrap().ground_energy(), None);
        assert!(c.check_site(0).is_err());
        assert!(c.check_site(9).is_err());
        assert!(ChainSpec::infinite(1.0).unwrap().check_site(-40).is_ok());
    }

    #[test]
    fn infinite_green_basics() {
        assert_eq!(green_infinite(1, 1, 0.0).unwrap(), C64::new(1.0, 0.0));
        let t = 1.7;
        let j1 = bessel_j(1, 2.0 * t).unwrap();
        // nearest-neighbour hop picks up a factor i
        assert!(close(green_infinite(2, 1, t).unwrap(), C64::new(0.0, j1), 1e-15));
        assert!(close(green_infinite(0, 1, t).unwrap(), C64::new(0.0, j1), 1e-15));
    }

    #[test]
    fn infinite_green_sum_of_squares() {
        let total: f64 = (-60..=60)
            .map(|x| green_infinite(x, 1, 3.0).unwrap().norm_sqr())
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn finite_green_identity_and_periodicity() {
        let c = ChainSpec::finite(10, 1.0).unwrap();
        assert!(close(green_finite(&c, 4, 4, 0.0).unwrap(), C64::new(1.0, 0.0), 1e-15));
        assert!(close(green_finite(&c, 7, 4, 0.0).unwrap(), C64::new(0.0, 0.0), 1e-15));
        // the kernel depends on the separation mod N only
        let a = RingKernel::new(10, 2.3).amplitude(3);
        let b = RingKernel::new(10, 2.3).amplitude(13 % 10);
        assert_eq!(a, b);
        assert!(green_finite(&c, 11, 1, 1.0).is_err());
        assert_eq!(
            green_finite(&ChainSpec::infinite(1.0).unwrap(), 1, 1, 1.0),
            Err(Error::InfiniteChain)
        );
    }

    #[test]
    fn finite_matches_bessel_before_wrap() {
        let c = ChainSpec::finite(1000, 1.0).unwrap();
        let f = green_finite(&c, 8, 1, 10.0).unwrap();
        let i = green_infinite(8, 1, 10.0).unwrap();
        assert!(close(f, i, 1e-8), "{f} vs {i}");
    }

    #[test]
    fn propagator_matrix_is_unitary_and_translation_invariant() {
        let c = ChainSpec::finite(10, 1.0).unwrap();
        let p0 = propagator_matrix(&c, 0.0).unwrap();
        assert!((p0.amplitudes.clone() - DMatrix::identity(10, 10)).norm() < 1e-14);
        let p = propagator_matrix(&c, 5.0).unwrap();
        assert!(p.column_norm_deviation() < 1e-10);
        assert!(p.translation_deviation() < 1e-12);
        let column = green_column(&c, 3, 5.0).unwrap();
        for (x, v) in column.iter().enumerate() {
            assert_eq!(*v, p.get(x as i64 + 1, 3).unwrap());
        }
    }

    #[test]
    fn composition_small() {
        let c = ChainSpec::finite(17, 0.3).unwrap();
        let (t1, t2) = (1.3, 2.7);
        let a = propagator_matrix(&c, t1 + t2).unwrap();
        let b = propagator_matrix(&c, t1).unwrap();
        let g2 = propagator_matrix(&c, t2).unwrap();
        let lhs = &a.amplitudes * b.amplitudes.adjoint();
        assert!((lhs - g2.amplitudes).max_norm() < 1e-12);
    }

    #[test]
    fn combined_k_at_zero() {
        let chain = ChainSpec::finite(12, 1.0).unwrap();
        let s = InitialState::entangled(C64::new(0.6, 0.0), C64::new(0.0, 0.8), 5).unwrap();
        assert!(close(combined_k(&s, &chain, 1, 0.0).unwrap(), C64::new(0.6, 0.0), 1e-15));
        assert!(close(combined_k(&s, &chain, 5, 0.0).unwrap(), C64::new(0.0, 0.8), 1e-15));
        let u = InitialState::balanced();
        assert!(matches!(combined_k(&u, &chain, 1, 0.0), Err(Error::Usage(_))));
    }

    #[test]
    fn dressed_green_phase() {
        let chain = ChainSpec::finite(12, 1.0).unwrap();
        assert!(close(dressed_green(&chain, 1, 0.0).unwrap(), C64::new(1.0, 0.0), 1e-15));
        let g = green(&chain, 3, 1, 2.0).unwrap();
        let d = dressed_green(&chain, 3, 2.0).unwrap();
        assert!((d.norm() - g.norm()).abs() < 1e-15);
        let gapless = chain.with_magnon_gap(0.0).unwrap();
        assert_eq!(dressed_green(&gapless, 3, 2.0).unwrap(), g);
    }
}
