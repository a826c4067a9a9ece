//! Kicked Harper model in the one-magnon sector.
//!
//! Each period is a free XY flight of duration `τ` followed by a kick that
//! multiplies the amplitude on site `x` by `exp(2iτg cos(2πηx/N))`. With
//! integer `η` the kick potential sums to zero over the ring, so the
//! ferromagnetic state picks up no phase and the one-magnon phases above are
//! exact.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::channels::KrausChannel;
use crate::echo::{echo_from_expectations, expectations_from_amplitude, InitialState};
use crate::error::{invalid, Error, Result};
use crate::propagators::{green_column, propagator_matrix, ChainSpec, Propagator, Site};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarperParams {
    pub g: f64,
    pub tau: f64,
    pub eta: i64,
    pub sites: usize,
}

impl HarperParams {
    pub fn new(g: f64, tau: f64, eta: i64, sites: usize) -> Result<Self> {
        if !(g.is_finite() && g >= 0.0) {
            return Err(invalid("g", format!("kick strength must be non-negative, got {g}")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid("tau", format!("kick period must be positive, got {tau}")));
        }
        if sites < 3 {
            return Err(invalid("N", format!("ring needs at least 3 sites, got {sites}")));
        }
        if eta < 1 || eta >= sites as i64 {
            return Err(invalid("eta", format!("must lie in 1..={}, got {eta}", sites - 1)));
        }
        Ok(Self { g, tau, eta, sites })
    }

    /// `η = 1`
    pub fn with_default_eta(g: f64, tau: f64, sites: usize) -> Result<Self> {
        Self::new(g, tau, 1, sites)
    }

    pub fn chain(&self) -> ChainSpec {
        ChainSpec::xy(self.sites).expect("validated size")
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.g, tau, self.eta, self.sites)
    }
}

/// `cos(2πηx/N)` for x = 1..=N.
pub fn kick_couplings(params: &HarperParams) -> Vec<f64> {
    let n = params.sites as f64;
    (1..=params.sites)
        .map(|x| (2.0 * PI * params.eta as f64 * x as f64 / n).cos())
        .collect()
}

/// `exp(2iτg cos(2πηx/N))` for x = 1..=N.
pub fn kick_phases(params: &HarperParams) -> Vec<C64> {
    kick_couplings(params)
        .into_iter()
        .map(|c| C64::from_polar(1.0, 2.0 * params.tau * params.g * c))
        .collect()
}

/// One-period propagator: flight, then kick phase on the arrival site.
pub fn harper_step(params: &HarperParams) -> Result<Propagator> {
    let mut step = propagator_matrix(&params.chain(), params.tau)?;
    for (x, phase) in kick_phases(params).into_iter().enumerate() {
        step.amplitudes.row_mut(x).iter_mut().for_each(|z| *z *= phase);
    }
    Ok(step)
}

/// Composite Green function after `kicks` periods.
pub fn harper_green(params: &HarperParams, kicks: usize) -> Result<Propagator> {
    let chain = params.chain();
    let mut acc = Propagator::identity(chain)?;
    if kicks == 0 {
        return Ok(acc);
    }
    let step = harper_step(params)?;
    // binary powering keeps the product count at O(log n)
    let mut base = step.amplitudes;
    let mut k = kicks;
    while k > 0 {
        if k & 1 == 1 {
            acc.amplitudes = &base * &acc.amplitudes;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    acc.time = kicks as f64 * params.tau;
    Ok(acc)
}

/// Column `G̃[x][from]` after every kick `0..=kicks`, by repeated
/// matrix-vector products.
pub struct HarperColumns {
    step: DMatrix<C64>,
    current: Vec<C64>,
}

impl HarperColumns {
    pub fn new(params: &HarperParams, from: Site) -> Result<Self> {
        let chain = params.chain();
        chain.check_site(from)?;
        let mut current = vec![C64::from(0.0); params.sites];
        current[(from - 1) as usize] = C64::from(1.0);
        Ok(Self {
            step: harper_step(params)?.amplitudes,
            current,
        })
    }

    pub fn current(&self) -> &[C64] {
        &self.current
    }

    pub fn advance(&mut self) {
        let n = self.current.len();
        let mut next = vec![C64::from(0.0); n];
        for (j, &c) in self.current.iter().enumerate() {
            if c == C64::from(0.0) {
                continue;
            }
            let col = self.step.column(j);
            for (slot, a) in next.iter_mut().zip(col.iter()) {
                *slot += a * c;
            }
        }
        self.current = next;
    }

    /// Columns after `0, 1, ..., kicks` periods.
    pub fn collect(mut self, kicks: usize) -> Vec<Vec<C64>> {
        let mut out = Vec::with_capacity(kicks + 1);
        out.push(self.current.clone());
        for _ in 0..kicks {
            self.advance();
            out.push(self.current.clone());
        }
        out
    }
}

/// `G̃[x][from]` after `kicks` periods without building the full table.
pub fn harper_column(params: &HarperParams, from: Site, kicks: usize) -> Result<Vec<C64>> {
    let mut cols = HarperColumns::new(params, from)?;
    for _ in 0..kicks {
        cols.advance();
    }
    Ok(cols.current)
}

/// `Σ_x |ψ_x|⁴` of a normalized profile.
pub fn inverse_participation_ratio(amplitudes: &[C64]) -> f64 {
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    amplitudes.iter().map(|a| (a.norm_sqr() / norm).powi(2)).sum()
}

pub fn participation_ratio(amplitudes: &[C64]) -> f64 {
    1.0 / inverse_participation_ratio(amplitudes)
}

/// Rows `(x, n, G̃[x][1])` over the (site, kick) plane.
pub fn light_cone(params: &HarperParams, kicks: usize) -> Result<Vec<(usize, usize, C64)>> {
    let cols = HarperColumns::new(params, 1)?.collect(kicks);
    Ok(cols
        .iter()
        .enumerate()
        .flat_map(|(n, col)| col.iter().enumerate().map(move |(x, &a)| (x + 1, n, a)))
        .collect())
}

fn overlap(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn unentangled(state: &InitialState) -> Result<(C64, C64)> {
    match *state {
        InitialState::Unentangled { alpha, beta } => Ok((alpha, beta)),
        InitialState::Entangled { .. } => Err(Error::Usage(
            "this Harper echo is defined for the unentangled state α|F⟩ + β|1⟩".into(),
        )),
    }
}

/// `S(n) = Σ_x G̃[x][1](nτ) conj(G_XY[x][1](nτ))`.
pub fn xy_overlap(params: &HarperParams, kicks: usize) -> Result<C64> {
    let kicked = harper_column(params, 1, kicks)?;
    let free = green_column(&params.chain(), 1, kicks as f64 * params.tau)?;
    Ok(overlap(&kicked, &free))
}

/// `S(n)` for every `n = 0..=kicks`.
pub fn xy_overlap_series(params: &HarperParams, kicks: usize) -> Result<Vec<C64>> {
    let chain = params.chain();
    let mut cols = HarperColumns::new(params, 1)?;
    let mut out = Vec::with_capacity(kicks + 1);
    for n in 0..=kicks {
        if n > 0 {
            cols.advance();
        }
        let free = green_column(&chain, 1, n as f64 * params.tau)?;
        out.push(overlap(cols.current(), &free));
    }
    Ok(out)
}

/// `|u + (1-u) S|²` for `u = |α|²`, or its mean over `u` uniform on `[0, 1]`.
pub fn xy_echo_from_overlap(s: C64, u: f64, averaged: bool) -> f64 {
    if averaged {
        (1.0 + s.re + s.norm_sqr()) / 3.0
    } else {
        (C64::from(u) + s * (1.0 - u)).norm_sqr()
    }
}

/// Forward with kicks, backward with the free XY chain.
pub fn echo_xy_vs_harper(state: &InitialState, params: &HarperParams, kicks: usize, averaged: bool) -> Result<f64> {
    let (alpha, _) = unentangled(state)?;
    let s = xy_overlap(params, kicks)?;
    Ok(xy_echo_from_overlap(s, alpha.norm_sqr(), averaged))
}

/// Single incoherent QDP at site `m` after `kicks` periods.
pub fn echo_harper_qdp(
    state: &InitialState,
    params: &HarperParams,
    channel: &KrausChannel,
    m: Site,
    kicks: usize,
) -> Result<f64> {
    let chain = params.chain();
    state.check(&chain)?;
    chain.check_site(m)?;
    let amp = site_amplitude(state, params, m, kicks)?;
    echo_from_expectations(channel, &expectations_from_amplitude(state, amp))
}

fn site_amplitude(state: &InitialState, params: &HarperParams, m: Site, kicks: usize) -> Result<C64> {
    let idx = (m - 1) as usize;
    match *state {
        InitialState::Unentangled { .. } => Ok(harper_column(params, 1, kicks)?[idx]),
        InitialState::Entangled { alpha, beta, partner } => Ok(alpha * harper_column(params, 1, kicks)?[idx]
            + beta * harper_column(params, partner, kicks)?[idx]),
    }
}

/// Kick-count pairs for a time shared by both periods, if any.
pub fn commensurate_kicks(t: f64, tau1: f64, tau2: f64) -> Result<(usize, usize)> {
    let tol = COMMENSURATE_TOL * t.abs().max(1.0);
    let n1 = (t / tau1).round();
    let n2 = (t / tau2).round();
    if !(t >= 0.0) || (n1 * tau1 - t).abs() > tol || (n2 * tau2 - t).abs() > tol {
        return Err(Error::NonCommensurate { t, tau1, tau2 });
    }
    Ok((n1 as usize, n2 as usize))
}

pub const COMMENSURATE_TOL: f64 = 1e-9;

/// Largest denominator accepted when reading `τ1/τ2` as a fraction.
pub const MAX_PERIOD_DENOMINATOR: u64 = 10_000;

/// Forward with period `τ1`, backward with `τ2`, at a common multiple `t`.
pub fn echo_harper_reverse(
    state: &InitialState,
    forward: &HarperParams,
    backward: &HarperParams,
    t: f64,
) -> Result<f64> {
    if forward.g != backward.g || forward.eta != backward.eta || forward.sites != backward.sites {
        return Err(Error::Usage("forward and backward models must share g, eta and N".into()));
    }
    let (n1, n2) = commensurate_kicks(t, forward.tau, backward.tau)?;
    reverse_echo_at(state, forward, backward, n1, n2)
}

fn reverse_echo_at(state: &InitialState, forward: &HarperParams, backward: &HarperParams, n1: usize, n2: usize) -> Result<f64> {
    state.check(&forward.chain())?;
    match *state {
        InitialState::Unentangled { alpha, beta } => {
            let s = overlap(&harper_column(forward, 1, n1)?, &harper_column(backward, 1, n2)?);
            Ok((C64::from(alpha.norm_sqr()) + s * beta.norm_sqr()).norm_sqr())
        }
        InitialState::Entangled { alpha, beta, partner } => {
            let combine = |p: &HarperParams, n: usize| -> Result<Vec<C64>> {
                let a = harper_column(p, 1, n)?;
                let b = harper_column(p, partner, n)?;
                Ok(a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect())
            };
            Ok(overlap(&combine(forward, n1)?, &combine(backward, n2)?).norm_sqr())
        }
    }
}

/// Reverse-kicking echo at every commensurate time up to `t_max`, reusing
/// the column evolution across times.
pub fn reverse_echo_series(
    state: &InitialState,
    forward: &HarperParams,
    backward: &HarperParams,
    t_max: f64,
) -> Result<Vec<(f64, f64)>> {
    let (alpha, beta) = unentangled(state)?;
    let times = commensurate_times(forward.tau, backward.tau, t_max);
    let Some(&(_, n1_max, n2_max)) = times.last() else {
        return Ok(Vec::new());
    };
    let fwd = HarperColumns::new(forward, 1)?.collect(n1_max);
    let bwd = HarperColumns::new(backward, 1)?.collect(n2_max);
    Ok(times
        .iter()
        .map(|&(t, n1, n2)| {
            let s = overlap(&fwd[n1], &bwd[n2]);
            (t, (C64::from(alpha.norm_sqr()) + s * beta.norm_sqr()).norm_sqr())
        })
        .collect())
}

/// Times `t ≤ t_max` with `t = n1 τ1 = n2 τ2`, when `τ1/τ2` is a fraction
/// with denominator at most [`MAX_PERIOD_DENOMINATOR`] (to within 1e-9).
pub fn commensurate_times(tau1: f64, tau2: f64, t_max: f64) -> Vec<(f64, usize, usize)> {
    if !(tau1 > 0.0 && tau2 > 0.0 && tau1.is_finite() && tau2.is_finite()) {
        return Vec::new();
    }
    let Some((num, den)) = rational_approx(tau1 / tau2, MAX_PERIOD_DENOMINATOR) else {
        return Vec::new();
    };
    // τ1/τ2 = num/den  =>  den τ1 = num τ2
    let period = den as f64 * tau1;
    let mut out = Vec::new();
    let mut k = 1usize;
    loop {
        let t = k as f64 * period;
        if t > t_max + COMMENSURATE_TOL * t_max.abs().max(1.0) {
            break;
        }
        out.push((t, k * den as usize, k * num as usize));
        k += 1;
    }
    out
}

/// Best continued-fraction convergent within 1e-9 relative error.
fn rational_approx(x: f64, max_den: u64) -> Option<(u64, u64)> {
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64 / k1 as f64) - x).abs() <= COMMENSURATE_TOL * x {
            return Some((h1, k1));
        }
        let frac = rest - a as f64;
        if frac <= 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    None
}
