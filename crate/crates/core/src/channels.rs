//! Single-site quantum dynamical processes: Kraus channels and unitary gates.
//!
//! All 2×2 matrices are written in the `(|0⟩, |1⟩) = (up, down)` basis of the
//! affected spin, so `σ^z = diag(1, -1)` and a down spin is a magnon.

use nalgebra::Matrix2;

use crate::error::{invalid, Result};
use crate::propagators::{ChainSpec, Site};
use crate::C64;

pub type Mat2 = Matrix2<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Coefficients `(a_0, a_x, a_y, a_z)` with `E = a_0 1 + a_x σ^x + a_y σ^y + a_z σ^z`.
pub fn pauli_components(e: &Mat2) -> [C64; 4] {
    let half = |m: Mat2| (m * e).trace() * 0.5;
    [half(identity2()), half(sigma_x()), half(sigma_y()), half(sigma_z())]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelLabel {
    PhaseFlip,
    BitFlip,
    ProjectZ,
    ProjectX,
    Custom,
}

impl ChannelLabel {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelLabel::PhaseFlip => "phase-flip",
            ChannelLabel::BitFlip => "bit-flip",
            ChannelLabel::ProjectZ => "project-z",
            ChannelLabel::ProjectX => "project-x",
            ChannelLabel::Custom => "custom",
        }
    }
}

/// Non-selective single-site channel `ρ → Σ_i E_i ρ E_i†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    label: ChannelLabel,
    mixing: f64,
    operators: Vec<Mat2>,
}

/// Completeness check of a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    /// max-entry deviation of `Σ E_i†E_i` from the identity
    pub completeness_residual: f64,
    /// Frobenius norm of each operator
    pub operator_norms: Vec<f64>,
    pub passed: bool,
}

pub const COMPLETENESS_TOL: f64 = 1e-12;

fn check_mixing(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid("p", format!("mixing must lie in [0, 1], got {p}")))
    }
}

impl KrausChannel {
    /// `E_0 = √p 1`, `E_1 = √(1-p) σ^z`.
    pub fn phase_flip(p: f64) -> Result<Self> {
        check_mixing(p)?;
        Ok(Self {
            label: ChannelLabel::PhaseFlip,
            mixing: p,
            operators: vec![identity2() * C64::from(p.sqrt()), sigma_z() * C64::from((1.0 - p).sqrt())],
        })
    }

    /// `p = 1/2` dephasing, the same map as an unread σ^z measurement.
    pub fn phase_flip_measurement() -> Self {
        Self::phase_flip(0.5).expect("1/2 is a valid mixing")
    }

    /// `E_0 = √p 1`, `E_1 = √(1-p) σ^x`.
    pub fn bit_flip(p: f64) -> Result<Self> {
        check_mixing(p)?;
        Ok(Self {
            label: ChannelLabel::BitFlip,
            mixing: p,
            operators: vec![identity2() * C64::from(p.sqrt()), sigma_x() * C64::from((1.0 - p).sqrt())],
        })
    }

    /// Projectors `(1 ± σ^z)/2`.
    pub fn project_z() -> Self {
        Self::projectors(ChannelLabel::ProjectZ, sigma_z())
    }

    /// Projectors `(1 ± σ^x)/2`.
    pub fn project_x() -> Self {
        Self::projectors(ChannelLabel::ProjectX, sigma_x())
    }

    fn projectors(label: ChannelLabel, axis: Mat2) -> Self {
        let half = C64::from(0.5);
        Self {
            label,
            mixing: 0.5,
            operators: vec![(identity2() + axis) * half, (identity2() - axis) * half],
        }
    }

    /// Arbitrary operator list; rejected unless complete.
    pub fn custom(operators: Vec<Mat2>) -> Result<Self> {
        let ch = Self::custom_unchecked(operators)?;
        let report = ch.validate();
        if !report.passed {
            return Err(invalid(
                "operators",
                format!("Σ E†E deviates from identity by {:.3e}", report.completeness_residual),
            ));
        }
        Ok(ch)
    }

    /// Arbitrary non-empty operator list, completeness not enforced.
    pub fn custom_unchecked(operators: Vec<Mat2>) -> Result<Self> {
        if operators.is_empty() {
            return Err(invalid("operators", "channel needs at least one Kraus operator"));
        }
        Ok(Self {
            label: ChannelLabel::Custom,
            mixing: f64::NAN,
            operators,
        })
    }

    pub fn label(&self) -> ChannelLabel {
        self.label
    }

    /// `p` for flip channels, 1/2 for projectors, NaN for custom operator lists.
    pub fn mixing(&self) -> f64 {
        self.mixing
    }

    pub fn operators(&self) -> &[Mat2] {
        &self.operators
    }

    pub fn validate(&self) -> ChannelReport {
        validate_channel(self)
    }

    /// True when every operator is a combination of `1` and `σ^z` only, so
    /// the channel maps the zero-plus-one magnon sector into itself.
    pub fn is_z_diagonal(&self) -> bool {
        self.operators.iter().all(|e| {
            let [_, ax, ay, _] = pauli_components(e);
            ax.norm() < 1e-14 && ay.norm() < 1e-14
        })
    }

    pub fn describe(&self) -> String {
        match self.label {
            ChannelLabel::PhaseFlip | ChannelLabel::BitFlip => {
                format!("{}(p={})", self.label.name(), self.mixing)
            }
            _ => self.label.name().to_string(),
        }
    }
}

pub fn validate_channel(ch: &KrausChannel) -> ChannelReport {
    let sum = ch
        .operators
        .iter()
        .fold(Mat2::zeros(), |acc, e| acc + e.adjoint() * e);
    let residual = (sum - identity2()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    ChannelReport {
        completeness_residual: residual,
        operator_norms: ch.operators.iter().map(|e| e.norm()).collect(),
        passed: residual <= COMPLETENESS_TOL,
    }
}

/// Unitary `V|0⟩ = γ|0⟩ + δ|1⟩`, `V|1⟩ = -δ*|0⟩ + γ*|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentGate {
    gamma: C64,
    delta: C64,
}

/// Inputs within this distance of unit norm are rescaled; beyond it rejected.
pub const GATE_RENORMALIZE_TOL: f64 = 1e-9;

impl CoherentGate {
    pub fn new(gamma: C64, delta: C64) -> Result<Self> {
        if !(gamma.re.is_finite() && gamma.im.is_finite() && delta.re.is_finite() && delta.im.is_finite()) {
            return Err(invalid("gamma/delta", "components must be finite"));
        }
        let norm2 = gamma.norm_sqr() + delta.norm_sqr();
        if (norm2 - 1.0).abs() > GATE_RENORMALIZE_TOL {
            return Err(invalid(
                "gamma/delta",
                format!("|γ|² + |δ|² = {norm2}, expected 1"),
            ));
        }
        let s = norm2.sqrt();
        Ok(Self {
            gamma: gamma / s,
            delta: delta / s,
        })
    }

    pub fn identity() -> Self {
        Self {
            gamma: ONE,
            delta: ZERO,
        }
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }

    pub fn delta(&self) -> C64 {
        self.delta
    }

    /// `Im γ`
    pub fn gamma_imag(&self) -> f64 {
        self.gamma.im
    }

    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.gamma, -self.delta.conj(), self.delta, self.gamma.conj())
    }

    pub fn inverse(&self) -> Self {
        Self {
            gamma: self.gamma.conj(),
            delta: -self.delta,
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "coherent(gamma={}{:+}i, delta={}{:+}i)",
            self.gamma.re, self.gamma.im, self.delta.re, self.delta.im
        )
    }
}

/// Shorthand for [`CoherentGate::new`].
pub fn coherent(gamma: C64, delta: C64) -> Result<CoherentGate> {
    CoherentGate::new(gamma, delta)
}

#[derive(Debug, Clone, PartialEq)]
pub enum QdpKind {
    Incoherent(KrausChannel),
    Coherent(CoherentGate),
}

impl QdpKind {
    pub fn describe(&self) -> String {
        match self {
            QdpKind::Incoherent(ch) => ch.describe(),
            QdpKind::Coherent(g) => g.describe(),
        }
    }
}

/// When a QDP happens: a time on the continuous-time chain, or a number of
/// completed kicks in the Harper model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epoch {
    Time(f64),
    Kicks(usize),
}

impl Epoch {
    pub(crate) fn as_f64(&self) -> f64 {
        match *self {
            Epoch::Time(t) => t,
            Epoch::Kicks(n) => n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QdpEvent {
    pub site: Site,
    pub epoch: Epoch,
    pub kind: QdpKind,
}

impl QdpEvent {
    pub fn new(site: Site, epoch: Epoch, kind: QdpKind) -> Result<Self> {
        if let Epoch::Time(t) = epoch {
            if !(t.is_finite() && t >= 0.0) {
                return Err(invalid("t0", format!("epoch must be finite and non-negative, got {t}")));
            }
        }
        Ok(Self { site, epoch, kind })
    }

    pub fn check(&self, chain: &ChainSpec) -> Result<()> {
        chain.check_site(self.site)
    }
}

/// `n` QDPs of one kind at sites `m_1..m_n`, the j-th at time `j * spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct QdpSequence {
    pub spacing: f64,
    pub sites: Vec<Site>,
    pub kind: QdpKind,
}

impl QdpSequence {
    pub fn new(spacing: f64, sites: Vec<Site>, kind: QdpKind) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(invalid("spacing", format!("must be positive, got {spacing}")));
        }
        if sites.is_empty() {
            return Err(invalid("sites", "sequence needs at least one QDP"));
        }
        Ok(Self { spacing, sites, kind })
    }

    pub fn check(&self, chain: &ChainSpec) -> Result<()> {
        self.sites.iter().try_for_each(|&m| chain.check_site(m))
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Events in time order.
    pub fn events(&self) -> Vec<QdpEvent> {
        self.sites
            .iter()
            .enumerate()
            .map(|(j, &m)| QdpEvent {
                site: m,
                epoch: Epoch::Time((j + 1) as f64 * self.spacing),
                kind: self.kind.clone(),
            })
            .collect()
    }
}
