//! Loschmidt echoes of the integrable chain in closed form.
//!
//! Both initial states live in the zero-plus-one magnon sector, which the XXZ
//! dynamics preserves. A single QDP at site `m` and time `t0` therefore only
//! needs the one-magnon amplitude at `m`:
//!
//! * `α|F⟩ + β|1⟩` evolves to `α|F⟩ + β Σ_x D_x |x⟩` up to a global phase,
//!   with `D_x = exp(-iΔ_gap t) G[x][1](t)` (see [`dressed_green`]);
//! * `α|1⟩ + β|r⟩` evolves to `Σ_x K_x |x⟩`, `K_x = α G[x][1] + β G[x][r]`.
//!
//! Sequences of QDPs are handled exactly by evolving the sector density
//! matrix, and approximately by the string expansion truncated at a given
//! number of Green-function factors.

use nalgebra::{DMatrix, DVector};

use crate::MaxNorm;
use crate::channels::{pauli_components, CoherentGate, Epoch, KrausChannel, QdpEvent, QdpKind, QdpSequence};
use crate::error::{invalid, Error, Result};
use crate::propagators::{combined_k, dressed_green, green, propagator_matrix, ChainSpec, Site};
use crate::C64;

/// Normalization tolerance for initial-state amplitudes.
pub const STATE_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// `α|F⟩ + β|1⟩`: a product state, site 1 in a superposition.
    Unentangled { alpha: C64, beta: C64 },
    /// `α|1⟩ + β|r⟩`: one magnon shared between sites 1 and `r`.
    Entangled { alpha: C64, beta: C64, partner: Site },
}

fn check_norm(alpha: C64, beta: C64) -> Result<()> {
    let n = alpha.norm_sqr() + beta.norm_sqr();
    if (n - 1.0).abs() > STATE_NORM_TOL {
        return Err(invalid("alpha/beta", format!("|α|² + |β|² = {n}, expected 1")));
    }
    Ok(())
}

impl InitialState {
    pub fn unentangled(alpha: C64, beta: C64) -> Result<Self> {
        check_norm(alpha, beta)?;
        Ok(Self::Unentangled { alpha, beta })
    }

    pub fn entangled(alpha: C64, beta: C64, partner: Site) -> Result<Self> {
        check_norm(alpha, beta)?;
        if partner == 1 {
            return Err(invalid("r", "partner site must differ from site 1"));
        }
        Ok(Self::Entangled { alpha, beta, partner })
    }

    /// `(|F⟩ + |1⟩)/√2`
    pub fn balanced() -> Self {
        let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        Self::Unentangled { alpha: h, beta: h }
    }

    /// Real amplitudes with `|β|² = beta2`.
    pub fn from_beta2(beta2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta2) {
            return Err(invalid("beta2", format!("must lie in [0, 1], got {beta2}")));
        }
        Self::unentangled(C64::from((1.0 - beta2).sqrt()), C64::from(beta2.sqrt()))
    }

    pub fn alpha(&self) -> C64 {
        match *self {
            Self::Unentangled { alpha, .. } | Self::Entangled { alpha, .. } => alpha,
        }
    }

    pub fn beta(&self) -> C64 {
        match *self {
            Self::Unentangled { beta, .. } | Self::Entangled { beta, .. } => beta,
        }
    }

    pub fn is_entangled(&self) -> bool {
        matches!(self, Self::Entangled { .. })
    }

    pub fn check(&self, chain: &ChainSpec) -> Result<()> {
        chain.check_site(1)?;
        if let Self::Entangled { partner, .. } = *self {
            chain.check_site(partner)?;
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match *self {
            Self::Unentangled { alpha, beta } => format!("unentangled(alpha={alpha}, beta={beta})"),
            Self::Entangled { alpha, beta, partner } => {
                format!("entangled(alpha={alpha}, beta={beta}, r={partner})")
            }
        }
    }
}

/// Pure state in the basis `{|F⟩, |1⟩, ..., |N⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    pub vacuum_amp: C64,
    pub magnon_amps: Vec<C64>,
}

impl SectorState {
    pub fn initial(state: &InitialState, sites: usize) -> Result<Self> {
        let chain = ChainSpec::finite(sites, 0.0)?;
        state.check(&chain)?;
        let mut magnon_amps = vec![C64::from(0.0); sites];
        let vacuum_amp = match *state {
            InitialState::Unentangled { alpha, beta } => {
                magnon_amps[0] = beta;
                alpha
            }
            InitialState::Entangled { alpha, beta, partner } => {
                magnon_amps[0] = alpha;
                magnon_amps[(partner - 1) as usize] = beta;
                C64::from(0.0)
            }
        };
        Ok(Self {
            vacuum_amp,
            magnon_amps,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vacuum_amp.norm_sqr() + self.magnon_amps.iter().map(|b| b.norm_sqr()).sum::<f64>()
    }

    fn to_vector(&self) -> DVector<C64> {
        DVector::from_iterator(
            self.magnon_amps.len() + 1,
            std::iter::once(self.vacuum_amp).chain(self.magnon_amps.iter().copied()),
        )
    }

    fn from_vector(v: &DVector<C64>) -> Self {
        Self {
            vacuum_amp: v[0],
            magnon_amps: v.iter().skip(1).copied().collect(),
        }
    }

    pub fn evolve(&self, unitary: &DMatrix<C64>) -> Self {
        Self::from_vector(&(unitary * self.to_vector()))
    }
}

/// Evolution over time `t` restricted to `{|F⟩, |1⟩..|N⟩}`, with the
/// zero-magnon energy removed: `diag(1, exp(-iΔ_gap t) G(t))`.
pub fn sector_unitary(chain: &ChainSpec, t: f64) -> Result<DMatrix<C64>> {
    let n = chain.require_finite()?;
    let g = propagator_matrix(chain, t)?;
    let phase = C64::from_polar(1.0, -chain.magnon_gap() * t);
    let mut u = DMatrix::zeros(n + 1, n + 1);
    u[(0, 0)] = C64::from(1.0);
    u.view_mut((1, 1), (n, n)).copy_from(&(g.amplitudes * phase));
    Ok(u)
}

/// Density matrix on `{|F⟩, |1⟩..|N⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorDensity {
    pub matrix: DMatrix<C64>,
}

impl SectorDensity {
    pub fn pure(state: &SectorState) -> Self {
        let v = state.to_vector();
        Self {
            matrix: &v * v.adjoint(),
        }
    }

    pub fn evolve(&mut self, unitary: &DMatrix<C64>) {
        self.matrix = unitary * &self.matrix * unitary.adjoint();
    }

    /// Applies a channel built from `1` and `σ^z` at site `m`. In this basis
    /// `σ^z_m` is diagonal: `+1` on `|F⟩` and `|x ≠ m⟩`, `-1` on `|m⟩`.
    pub fn apply_z_channel(&mut self, channel: &KrausChannel, m: Site) -> Result<()> {
        if !channel.is_z_diagonal() {
            return Err(Error::Unsupported(format!(
                "{} leaves the zero-plus-one magnon sector",
                channel.describe()
            )));
        }
        let dim = self.matrix.nrows();
        if m < 1 || m as usize >= dim {
            return Err(Error::SiteOutOfRange { site: m, size: dim - 1 });
        }
        let coeffs: Vec<(C64, C64)> = channel
            .operators()
            .iter()
            .map(|e| {
                let [a0, _, _, az] = pauli_components(e);
                (a0 + az, a0 - az)
            })
            .collect();
        // factor[a][b]: a, b = 0 for "not at m", 1 for "at m"
        let mut factor = [[C64::from(0.0); 2]; 2];
        for (up, down) in &coeffs {
            let d = [*up, *down];
            for a in 0..2 {
                for b in 0..2 {
                    factor[a][b] += d[a] * d[b].conj();
                }
            }
        }
        let at = m as usize;
        for j in 0..dim {
            for i in 0..dim {
                self.matrix[(i, j)] *= factor[(i == at) as usize][(j == at) as usize];
            }
        }
        Ok(())
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn fidelity(&self, state: &SectorState) -> f64 {
        let v = state.to_vector();
        (v.adjoint() * &self.matrix * &v)[(0, 0)].re
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).max_norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoAxis {
    T0,
    T,
    N,
    M,
}

impl EchoAxis {
    pub fn label(&self) -> &'static str {
        match self {
            EchoAxis::T0 => "t0",
            EchoAxis::T => "t",
            EchoAxis::N => "n",
            EchoAxis::M => "m",
        }
    }
}

/// Sampled echo curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoSeries {
    pub axis: EchoAxis,
    pub samples: Vec<(f64, f64)>,
    pub description: String,
}

/// Allowed overshoot of an echo outside `[0, 1]` from rounding.
pub const ECHO_RANGE_TOL: f64 = 1e-10;

impl EchoSeries {
    pub fn new(axis: EchoAxis, description: impl Into<String>) -> Self {
        Self {
            axis,
            samples: Vec::new(),
            description: description.into(),
        }
    }

    pub fn push(&mut self, parameter: f64, echo: f64) {
        self.samples.push((parameter, echo));
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    pub fn in_range(&self) -> bool {
        self.values()
            .all(|l| (-ECHO_RANGE_TOL..=1.0 + ECHO_RANGE_TOL).contains(&l))
    }
}

/// Single-site expectation values needed by a one-site channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteExpectations {
    pub z: f64,
    pub x: f64,
    /// `None` where the closed form is not provided.
    pub y: Option<f64>,
}

/// Expectations at site `m` from the one-magnon amplitude there, which is
/// the dressed Green function (unentangled) or `K^m` (entangled).
pub(crate) fn expectations_from_amplitude(state: &InitialState, amp: C64) -> SiteExpectations {
    match *state {
        InitialState::Unentangled { alpha, beta } => {
            let w = alpha.conj() * beta * amp;
            SiteExpectations {
                z: 1.0 - 2.0 * (beta * amp).norm_sqr(),
                x: 2.0 * w.re,
                y: Some(2.0 * w.im),
            }
        }
        InitialState::Entangled { .. } => SiteExpectations {
            z: 1.0 - 2.0 * amp.norm_sqr(),
            x: 0.0,
            y: None,
        },
    }
}

/// `Σ_i |⟨E_i⟩|²` with every `E_i` expanded on `1, σ^x, σ^y, σ^z`.
pub(crate) fn echo_from_expectations(channel: &KrausChannel, e: &SiteExpectations) -> Result<f64> {
    channel.operators().iter().try_fold(0.0, |acc, op| {
        let [a0, ax, ay, az] = pauli_components(op);
        let mut mean = a0 + ax * e.x + az * e.z;
        if ay.norm() > 1e-14 {
            let y = e.y.ok_or_else(|| {
                Error::Unsupported("σ^y expectation on the entangled state; use the oracle".into())
            })?;
            mean += ay * y;
        }
        Ok(acc + mean.norm_sqr())
    })
}

fn site_amplitude(state: &InitialState, chain: &ChainSpec, m: Site, t: f64) -> Result<C64> {
    state.check(chain)?;
    chain.check_site(m)?;
    match state {
        InitialState::Unentangled { .. } => dressed_green(chain, m, t),
        InitialState::Entangled { .. } => combined_k(state, chain, m, t),
    }
}

pub fn site_expectations(state: &InitialState, chain: &ChainSpec, m: Site, t0: f64) -> Result<SiteExpectations> {
    Ok(expectations_from_amplitude(state, site_amplitude(state, chain, m, t0)?))
}

/// `⟨σ^z_m⟩` at time `t0`.
pub fn expect_sigma_z(state: &InitialState, chain: &ChainSpec, m: Site, t0: f64) -> Result<f64> {
    Ok(site_expectations(state, chain, m, t0)?.z)
}

/// `⟨σ^x_m⟩` at time `t0`; identically zero for the entangled state, whose
/// magnon number is fixed.
pub fn expect_sigma_x(state: &InitialState, chain: &ChainSpec, m: Site, t0: f64) -> Result<f64> {
    if state.is_entangled() {
        state.check(chain)?;
        chain.check_site(m)?;
        return Ok(0.0);
    }
    Ok(site_expectations(state, chain, m, t0)?.x)
}

/// Echo after one incoherent QDP: `L = Σ_i |⟨Ψ(t0)|E_i|Ψ(t0)⟩|²`.
pub fn echo_incoherent(state: &InitialState, chain: &ChainSpec, event: &QdpEvent) -> Result<f64> {
    let channel = match &event.kind {
        QdpKind::Incoherent(ch) => ch,
        QdpKind::Coherent(_) => {
            return Err(Error::Usage("echo_incoherent needs a Kraus channel".into()));
        }
    };
    let t0 = match event.epoch {
        Epoch::Time(t) => t,
        Epoch::Kicks(_) => return Err(Error::Usage("kick epochs belong to the Harper model".into())),
    };
    let e = site_expectations(state, chain, event.site, t0)?;
    echo_from_expectations(channel, &e)
}

/// Echo after a unitary gate at `m`: `|⟨Ψ(t0)|V_m|Ψ(t0)⟩|²`.
pub fn echo_coherent(state: &InitialState, chain: &ChainSpec, m: Site, t0: f64, gate: &CoherentGate) -> Result<f64> {
    let amp = site_amplitude(state, chain, m, t0)?;
    let gamma = gate.gamma();
    let shift = C64::new(0.0, -2.0 * gate.gamma_imag());
    let mean = match *state {
        InitialState::Unentangled { alpha, beta } => {
            let occupation = (beta * amp).norm_sqr();
            // vacuum <-> |m⟩ cross terms
            let w = gate.delta().conj() * alpha.conj() * beta * amp;
            gamma + shift * occupation + C64::new(0.0, -2.0 * w.im)
        }
        InitialState::Entangled { .. } => gamma + shift * amp.norm_sqr(),
    };
    Ok(mean.norm_sqr())
}

/// Large-epoch value `|γ|^{2n}` of the echo after `n` coherent QDPs.
pub fn coherent_asymptote(gate: &CoherentGate, n: u32) -> f64 {
    gate.gamma().norm_sqr().powi(n as i32)
}

fn z_channel(seq: &QdpSequence) -> Result<&KrausChannel> {
    match &seq.kind {
        QdpKind::Incoherent(ch) if ch.is_z_diagonal() => Ok(ch),
        QdpKind::Incoherent(ch) => Err(Error::Unsupported(format!(
            "{} changes the magnon number; use the oracle",
            ch.describe()
        ))),
        QdpKind::Coherent(_) => Err(Error::Unsupported(
            "sequences of coherent QDPs leave the one-magnon sector; use the oracle".into(),
        )),
    }
}

/// `L(n)` after each QDP of the sequence, from the exact sector density.
pub fn echo_multi_exact_z(state: &InitialState, chain: &ChainSpec, seq: &QdpSequence) -> Result<EchoSeries> {
    let channel = z_channel(seq)?;
    let n = chain.require_finite()?;
    seq.check(chain)?;
    let u = sector_unitary(chain, seq.spacing)?;
    let mut psi = SectorState::initial(state, n)?;
    let mut rho = SectorDensity::pure(&psi);
    let mut out = EchoSeries::new(
        EchoAxis::N,
        format!("multi-exact {} spacing={}", channel.describe(), seq.spacing),
    );
    for (j, &m) in seq.sites.iter().enumerate() {
        psi = psi.evolve(&u);
        rho.evolve(&u);
        rho.apply_z_channel(channel, m)?;
        out.push((j + 1) as f64, rho.fidelity(&psi));
    }
    Ok(out)
}

/// Green-function data for a fixed list of σ^z insertions.
struct StringTable {
    /// `|β|²` for the unentangled state, 1 for the entangled one
    weight: f64,
    /// amplitude at the first insertion (`G[m_j][1](T_j)` or `K^{m_j}(T_j)`)
    head: Vec<C64>,
    /// `hop[i][j] = G[m_j][m_i](T_j - T_i)` for i < j
    hop: Vec<Vec<C64>>,
}

impl StringTable {
    fn new(chain: &ChainSpec, state: &InitialState, events: &[(Site, f64)]) -> Result<Self> {
        state.check(chain)?;
        let head = events
            .iter()
            .map(|&(m, t)| match state {
                InitialState::Unentangled { .. } => green(chain, m, 1, t),
                InitialState::Entangled { .. } => combined_k(state, chain, m, t),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut hop = vec![vec![C64::from(0.0); events.len()]; events.len()];
        for i in 0..events.len() {
            for j in i + 1..events.len() {
                hop[i][j] = green(chain, events[j].0, events[i].0, events[j].1 - events[i].1)?;
            }
        }
        let weight = match state {
            InitialState::Unentangled { beta, .. } => beta.norm_sqr(),
            InitialState::Entangled { .. } => 1.0,
        };
        Ok(Self { weight, head, hop })
    }

    /// Amplitude with σ^z inserted at the events selected by `mask`, keeping
    /// terms with at most `order` Green-function factors.
    fn amplitude(&self, mask: u64, order: usize) -> C64 {
        let chosen: Vec<usize> = (0..self.head.len()).filter(|i| mask >> i & 1 == 1).collect();
        let mut total = C64::from(0.0);
        let max_len = order.saturating_sub(1).min(chosen.len());
        // enumerate subsets of `chosen`
        for sub in 1u64..(1u64 << chosen.len()) {
            let picks: Vec<usize> = (0..chosen.len())
                .filter(|b| sub >> b & 1 == 1)
                .map(|b| chosen[b])
                .collect();
            if picks.len() > max_len {
                continue;
            }
            let first = picks[0];
            let last = *picks.last().expect("non-empty");
            let mut term = self.head[first] * self.head[last].conj();
            for w in picks.windows(2) {
                term *= self.hop[w[0]][w[1]];
            }
            total += term * (-2.0f64).powi(picks.len() as i32);
        }
        C64::from(1.0) + total * self.weight
    }
}

fn check_order(order: usize) -> Result<()> {
    if order < 2 {
        return Err(invalid("order", format!("truncation order must be at least 2, got {order}")));
    }
    Ok(())
}

/// `⟨Ψ(T)| U σ^z_{m_n} U ... σ^z_{m_1} U |Ψ(0)⟩` expanded in products of
/// Green functions, keeping terms with at most `order` factors.
///
/// `intervals[j]` is the free evolution before the j-th insertion; the
/// evolution after the last insertion cancels against `⟨Ψ(T)|`.
pub fn string_amplitude_truncated(
    chain: &ChainSpec,
    state: &InitialState,
    sites: &[Site],
    intervals: &[f64],
    order: usize,
) -> Result<C64> {
    check_order(order)?;
    if sites.len() != intervals.len() {
        return Err(Error::DimensionMismatch {
            expected: sites.len(),
            got: intervals.len(),
        });
    }
    if sites.len() > 30 {
        return Err(invalid("sites", "at most 30 insertions"));
    }
    let mut clock = 0.0;
    let mut events = Vec::with_capacity(sites.len());
    for (&m, &dt) in sites.iter().zip(intervals) {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(invalid("intervals", format!("must be non-negative, got {dt}")));
        }
        chain.check_site(m)?;
        clock += dt;
        events.push((m, clock));
    }
    let table = StringTable::new(chain, state, &events)?;
    Ok(table.amplitude((1u64 << sites.len()) - 1, order))
}

/// Echo after each QDP of the sequence, assembled from truncated strings.
/// The channel must act as `ρ → q ρ + (1-q) σ^z ρ σ^z`.
pub fn echo_multi_truncated(
    state: &InitialState,
    chain: &ChainSpec,
    seq: &QdpSequence,
    order: usize,
) -> Result<EchoSeries> {
    check_order(order)?;
    let channel = z_channel(seq)?;
    seq.check(chain)?;
    if seq.len() > 20 {
        return Err(invalid("sites", "truncated assembly supports at most 20 QDPs"));
    }
    let (mut keep, mut flip, mut cross) = (0.0, 0.0, C64::from(0.0));
    for e in channel.operators() {
        let [a0, _, _, az] = pauli_components(e);
        keep += a0.norm_sqr();
        flip += az.norm_sqr();
        cross += a0 * az.conj();
    }
    if cross.norm() > 1e-12 {
        return Err(Error::Unsupported(format!(
            "{} is not a mixture of 1 and σ^z conjugations",
            channel.describe()
        )));
    }
    let events: Vec<(Site, f64)> = seq
        .events()
        .iter()
        .map(|e| (e.site, e.epoch.as_f64()))
        .collect();
    let table = StringTable::new(chain, state, &events)?;
    let mut out = EchoSeries::new(
        EchoAxis::N,
        format!("multi-truncated order={order} {} spacing={}", channel.describe(), seq.spacing),
    );
    for n in 1..=events.len() {
        let mut total = 0.0;
        for mask in 0u64..(1u64 << n) {
            let flips = mask.count_ones() as i32;
            let w = keep.powi(n as i32 - flips) * flip.powi(flips);
            if w == 0.0 {
                continue;
            }
            total += w * table.amplitude(mask, order).norm_sqr();
        }
        out.push(n as f64, total);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::KrausChannel;

    fn half() -> C64 {
        C64::from(std::f64::consts::FRAC_1_SQRT_2)
    }

    fn inf() -> ChainSpec {
        ChainSpec::infinite(1.0).unwrap()
    }

    fn event(ch: KrausChannel, m: Site, t0: f64) -> QdpEvent {
        QdpEvent::new(m, Epoch::Time(t0), QdpKind::Incoherent(ch)).unwrap()
    }

    #[test]
    fn state_validation() {
        assert!(InitialState::unentangled(C64::from(1.0), C64::from(0.1)).is_err());
        assert!(InitialState::entangled(half(), half(), 1).is_err());
        let e = InitialState::entangled(half(), half(), 11).unwrap();
        assert!(e.check(&ChainSpec::finite(10, 1.0).unwrap()).is_err());
        assert!(InitialState::from_beta2(1.2).is_err());
    }

    #[test]
    fn sigma_z_examples() {
        let u = InitialState::balanced();
        assert!(expect_sigma_z(&u, &inf(), 1, 0.0).unwrap().abs() < 1e-15);
        assert_eq!(expect_sigma_z(&u, &inf(), 5, 0.0).unwrap(), 1.0);
        let e = InitialState::entangled(half(), half(), 5).unwrap();
        assert!(expect_sigma_z(&e, &inf(), 5, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn sigma_x_examples() {
        let u = InitialState::balanced();
        assert!((expect_sigma_x(&u, &inf(), 1, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(expect_sigma_x(&u, &inf(), 1, 50.0).unwrap().abs() <= 0.15);
        let e = InitialState::entangled(half(), half(), 5).unwrap();
        for m in [1, 3, 5] {
            assert_eq!(expect_sigma_x(&e, &inf(), m, 2.7).unwrap(), 0.0);
        }
    }

    #[test]
    fn incoherent_examples() {
        let u = InitialState::balanced();
        for p in [0.0, 0.3, 1.0] {
            let l = echo_incoherent(&u, &inf(), &event(KrausChannel::phase_flip(p).unwrap(), 1, 0.0)).unwrap();
            assert!((l - p).abs() < 1e-15);
        }
        let e = InitialState::entangled(half(), half(), 5).unwrap();
        for t0 in [0.0, 1.0, 7.5] {
            let l = echo_incoherent(&e, &inf(), &event(KrausChannel::bit_flip(0.4).unwrap(), 2, t0)).unwrap();
            assert!((l - 0.4).abs() < 1e-12);
        }
        let l = echo_incoherent(&e, &inf(), &event(KrausChannel::project_z(), 1, 50.0)).unwrap();
        assert!(l >= 0.99);
    }

    #[test]
    fn sigma_y_channel_on_entangled_state_is_unsupported() {
        use crate::channels::sigma_y;
        let ch = KrausChannel::custom(vec![
            crate::channels::identity2() * C64::from(0.5f64.sqrt()),
            sigma_y() * C64::from(0.5f64.sqrt()),
        ])
        .unwrap();
        let e = InitialState::entangled(half(), half(), 5).unwrap();
        assert!(matches!(
            echo_incoherent(&e, &inf(), &event(ch.clone(), 1, 1.0)),
            Err(Error::Unsupported(_))
        ));
        assert!(echo_incoherent(&InitialState::balanced(), &inf(), &event(ch, 1, 1.0)).is_ok());
    }

    #[test]
    fn coherent_examples() {
        let s3 = 1.0 / 3f64.sqrt();
        let gate = CoherentGate::new(C64::new(s3, s3), C64::from(s3)).unwrap();
        let id = CoherentGate::identity();
        let chain = ChainSpec::finite(10, 1.0).unwrap();
        for m in 1..=10 {
            let l = echo_coherent(&InitialState::balanced(), &chain, m, 1.3, &id).unwrap();
            assert!((l - 1.0).abs() < 1e-14);
        }
        let vacuum = InitialState::unentangled(C64::from(1.0), C64::from(0.0)).unwrap();
        let l = echo_coherent(&vacuum, &chain, 3, 2.0, &gate).unwrap();
        assert!((l - 2.0 / 3.0).abs() < 1e-14);
        assert!((coherent_asymptote(&gate, 2) - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(coherent_asymptote(&gate, 0), 1.0);
        assert_eq!(coherent_asymptote(&id, 7), 1.0);
    }

    #[test]
    fn multi_exact_reduces_to_single() {
        let chain = ChainSpec::finite(10, 1.0).unwrap();
        let u = InitialState::balanced();
        for ch in [KrausChannel::project_z(), KrausChannel::phase_flip(0.3).unwrap()] {
            let seq = QdpSequence::new(0.8, vec![4], QdpKind::Incoherent(ch.clone())).unwrap();
            let multi = echo_multi_exact_z(&u, &chain, &seq).unwrap().samples[0].1;
            let single = echo_incoherent(&u, &chain, &event(ch, 4, 0.8)).unwrap();
            assert!((multi - single).abs() < 1e-12);
        }
        let id = QdpSequence::new(0.8, vec![1, 2, 3, 4], QdpKind::Incoherent(KrausChannel::phase_flip(1.0).unwrap())).unwrap();
        for l in echo_multi_exact_z(&u, &chain, &id).unwrap().values() {
            assert!((l - 1.0).abs() < 1e-12);
        }
        let bad = QdpSequence::new(0.8, vec![1], QdpKind::Incoherent(KrausChannel::project_x())).unwrap();
        assert!(matches!(echo_multi_exact_z(&u, &chain, &bad), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sector_density_invariants() {
        let chain = ChainSpec::finite(8, 1.0).unwrap();
        let u = sector_unitary(&chain, 1.1).unwrap();
        let psi = SectorState::initial(&InitialState::balanced(), 8).unwrap();
        let mut rho = SectorDensity::pure(&psi);
        for m in [2, 1, 5] {
            rho.evolve(&u);
            rho.apply_z_channel(&KrausChannel::project_z(), m).unwrap();
        }
        assert!(rho.hermiticity_residual() < 1e-12);
        assert!((rho.trace() - 1.0).abs() < 1e-10);
        assert!(rho.min_eigenvalue() > -1e-10);
        assert!((psi.evolve(&u).norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn truncated_single_site_matches_sigma_z() {
        let u = InitialState::from_beta2(0.3).unwrap();
        let chain = inf();
        for k in [2, 3, 5] {
            let a = string_amplitude_truncated(&chain, &u, &[4], &[1.7], k).unwrap();
            let z = expect_sigma_z(&u, &chain, 4, 1.7).unwrap();
            assert!((a - C64::from(z)).norm() < 1e-14);
        }
        assert!(string_amplitude_truncated(&chain, &u, &[4], &[1.7], 1).is_err());
        let far = string_amplitude_truncated(&chain, &u, &[1, 2, 3], &[400.0, 400.0, 400.0], 4).unwrap();
        assert!((far - C64::from(1.0)).norm() < 0.01);
    }
}
