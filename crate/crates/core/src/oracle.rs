//! Dense reference evolution on the full `2^N` Hilbert space.
//!
//! Basis index bit `x - 1` is set when site `x` is spin down, so the
//! ferromagnetic state is index 0 and the one-magnon state `|x⟩` is index
//! `1 << (x - 1)`. Every operator built here conserves the number of down
//! spins, so evolution runs block by block over magnetization sectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::MaxNorm;
use crate::channels::{CoherentGate, Epoch, KrausChannel, Mat2, QdpEvent, QdpKind};
use crate::echo::InitialState;
use crate::error::{Error, Result};
use crate::harper::{kick_couplings, HarperParams};
use crate::propagators::{ChainSpec, Site};
use crate::C64;

pub const MAX_SITES: usize = 12;

/// Residual accepted by the Hermitian, unitary and conservation checks.
pub const OPERATOR_TOL: f64 = 1e-10;

/// Largest allowed change of the echo between two final times.
pub const DRIFT_TOL: f64 = 1e-10;

/// Ensemble size above which a mixed state is stored as a dense matrix.
pub const ENSEMBLE_LIMIT: usize = 64;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn check_sites(sites: usize) -> Result<()> {
    if sites > MAX_SITES {
        return Err(Error::TooLarge { sites, max: MAX_SITES });
    }
    if sites < 3 {
        return Err(Error::InvalidParameter {
            field: "N",
            reason: format!("ring needs at least 3 sites, got {sites}"),
        });
    }
    Ok(())
}

fn check_site(sites: usize, m: Site) -> Result<usize> {
    if m < 1 || m as usize > sites {
        return Err(Error::SiteOutOfRange { site: m, size: sites });
    }
    Ok(m as usize - 1)
}

fn sites_of_dimension(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() {
        return Err(Error::Domain(format!("dimension {dim} is not a power of two")));
    }
    let sites = dim.trailing_zeros() as usize;
    check_sites(sites)?;
    Ok(sites)
}

pub fn one_magnon_index(x: Site) -> usize {
    1usize << (x - 1)
}

/// `+1` for spin up, `-1` for spin down.
fn spin_z(state: usize, bit: usize) -> f64 {
    if state >> bit & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    sites: usize,
    matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let sites = sites_of_dimension(matrix.nrows())?;
        Ok(Self { sites, matrix })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).max_norm()
    }

    pub fn unitarity_residual(&self) -> f64 {
        let dim = self.dimension();
        (self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(dim, dim)).max_norm()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= OPERATOR_TOL
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_residual() <= OPERATOR_TOL
    }

    /// Largest entry of `[A, Σ σ^z]`.
    pub fn magnetization_commutator(&self) -> f64 {
        let dim = self.dimension();
        let sz: Vec<f64> = (0..dim).map(|s| self.sites as f64 - 2.0 * s.count_ones() as f64).collect();
        let mut worst = 0.0f64;
        for c in 0..dim {
            for r in 0..dim {
                let v = self.matrix[(r, c)] * (sz[c] - sz[r]);
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    /// `⟨x'|A|x⟩` for `x, x' = 1..=N`.
    pub fn one_magnon_block(&self) -> DMatrix<C64> {
        let n = self.sites;
        DMatrix::from_fn(n, n, |r, c| self.matrix[(1 << r, 1 << c)])
    }

    pub fn vacuum_element(&self) -> C64 {
        self.matrix[(0, 0)]
    }

    pub fn apply(&self, psi: &DVector<C64>) -> Result<DVector<C64>> {
        check_dimension(self.dimension(), psi.len())?;
        Ok(&self.matrix * psi)
    }

    /// `self · other`
    pub fn compose(&self, other: &DenseOperator) -> Result<DenseOperator> {
        check_dimension(self.dimension(), other.dimension())?;
        Ok(DenseOperator {
            sites: self.sites,
            matrix: &self.matrix * &other.matrix,
        })
    }
}

fn check_dimension(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `-½ Σ (σxσx + σyσy + Δ σzσz)` on the periodic ring.
pub fn build_xxz(chain: &ChainSpec) -> Result<DenseOperator> {
    let sites = chain.require_finite()?;
    check_sites(sites)?;
    let delta = chain.anisotropy();
    let dim = 1usize << sites;
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for s in 0..dim {
        let mut diag = 0.0;
        for i in 0..sites {
            let j = (i + 1) % sites;
            diag += spin_z(s, i) * spin_z(s, j);
            if (s >> i & 1) != (s >> j & 1) {
                let flipped = s ^ (1 << i) ^ (1 << j);
                h[(flipped, s)] += C64::from(-1.0);
            }
        }
        h[(s, s)] = C64::from(-0.5 * delta * diag);
    }
    Ok(DenseOperator { sites, matrix: h })
}

/// Kick after an XY flight of duration `τ`.
pub fn build_floquet(params: &HarperParams) -> Result<DenseOperator> {
    check_sites(params.sites)?;
    let h = build_xxz(&ChainSpec::xy(params.sites)?)?;
    let mut u = Spectrum::of(&h)?.unitary(params.tau)?;
    let kick = kick_diagonal(params);
    for (r, phase) in kick.iter().enumerate() {
        u.matrix.row_mut(r).iter_mut().for_each(|z| *z *= phase);
    }
    Ok(u)
}

/// Diagonal of `exp(-iτg Σ_j cos(2πηj/N) σ^z_j)`.
fn kick_diagonal(params: &HarperParams) -> Vec<C64> {
    let couplings = kick_couplings(params);
    (0..1usize << params.sites)
        .map(|s| {
            let field: f64 = couplings.iter().enumerate().map(|(j, c)| c * spin_z(s, j)).sum();
            C64::from_polar(1.0, -params.tau * params.g * field)
        })
        .collect()
}

/// Embedded single-site operator `op` acting on site `m`.
pub fn site_operator(sites: usize, op: &Mat2, m: Site) -> Result<DenseOperator> {
    check_sites(sites)?;
    let bit = check_site(sites, m)?;
    let dim = 1usize << sites;
    let mut a = DMatrix::<C64>::zeros(dim, dim);
    for s in 0..dim {
        let from = s >> bit & 1;
        for to in 0..2 {
            let target = (s & !(1 << bit)) | (to << bit);
            a[(target, s)] += op[(to, from)];
        }
    }
    Ok(DenseOperator { sites, matrix: a })
}

pub fn embed_state(state: &InitialState, sites: usize) -> Result<DVector<C64>> {
    check_sites(sites)?;
    state.check(&ChainSpec::finite(sites, 0.0)?)?;
    let mut psi = DVector::<C64>::zeros(1 << sites);
    match *state {
        InitialState::Unentangled { alpha, beta } => {
            psi[0] = alpha;
            psi[one_magnon_index(1)] = beta;
        }
        InitialState::Entangled { alpha, beta, partner } => {
            psi[one_magnon_index(1)] = alpha;
            psi[one_magnon_index(partner)] = beta;
        }
    }
    Ok(psi)
}

/// `(1 ⊗ … ⊗ op_m ⊗ … ⊗ 1) ψ`
pub fn apply_site(psi: &DVector<C64>, op: &Mat2, m: Site) -> Result<DVector<C64>> {
    let sites = sites_of_dimension(psi.len())?;
    let bit = check_site(sites, m)?;
    let mask = 1usize << bit;
    let mut out = psi.clone();
    for s in (0..psi.len()).filter(|s| s & mask == 0) {
        let (a0, a1) = (psi[s], psi[s | mask]);
        out[s] = op[(0, 0)] * a0 + op[(0, 1)] * a1;
        out[s | mask] = op[(1, 0)] * a0 + op[(1, 1)] * a1;
    }
    Ok(out)
}

pub fn apply_gate(psi: &DVector<C64>, gate: &CoherentGate, m: Site) -> Result<DVector<C64>> {
    apply_site(psi, &gate.matrix(), m)
}

fn apply_site_columns(matrix: &DMatrix<C64>, op: &Mat2, m: Site) -> Result<DMatrix<C64>> {
    let mut out = matrix.clone();
    for c in 0..matrix.ncols() {
        let col = apply_site(&matrix.column(c).into_owned(), op, m)?;
        out.set_column(c, &col);
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian operator, one magnetization block at a time.
#[derive(Debug, Clone)]
pub struct Spectrum {
    sites: usize,
    blocks: Vec<EigenBlock>,
}

#[derive(Debug, Clone)]
struct EigenBlock {
    indices: Vec<usize>,
    vectors: DMatrix<C64>,
    values: Vec<f64>,
}

fn magnetization_sectors(sites: usize) -> Vec<Vec<usize>> {
    let mut sectors = vec![Vec::new(); sites + 1];
    for s in 0..1usize << sites {
        sectors[s.count_ones() as usize].push(s);
    }
    sectors
}

fn extract_block(matrix: &DMatrix<C64>, indices: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(indices.len(), indices.len(), |r, c| matrix[(indices[r], indices[c])])
}

fn check_conserving(op: &DenseOperator) -> Result<()> {
    let residual = op.magnetization_commutator();
    if residual > OPERATOR_TOL {
        return Err(Error::Unsupported(format!(
            "operator does not conserve magnetization (residual {residual:.3e})"
        )));
    }
    Ok(())
}

fn block_matvec(indices: &[usize], matrix: &DMatrix<C64>, psi: &DVector<C64>, out: &mut DVector<C64>) -> bool {
    let local = DVector::from_iterator(indices.len(), indices.iter().map(|&i| psi[i]));
    if local.iter().all(|z| *z == zero()) {
        return false;
    }
    let moved = matrix * local;
    for (k, &i) in indices.iter().enumerate() {
        out[i] = moved[k];
    }
    true
}

impl Spectrum {
    pub fn of(h: &DenseOperator) -> Result<Self> {
        let residual = h.hermiticity_residual();
        if residual > OPERATOR_TOL {
            return Err(Error::Domain(format!("generator is not Hermitian (residual {residual:.3e})")));
        }
        check_conserving(h)?;
        let blocks = magnetization_sectors(h.sites)
            .into_iter()
            .map(|indices| {
                let eig = SymmetricEigen::new(extract_block(&h.matrix, &indices));
                EigenBlock {
                    indices,
                    vectors: eig.eigenvectors,
                    values: eig.eigenvalues.iter().copied().collect(),
                }
            })
            .collect();
        Ok(Self { sites: h.sites, blocks })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Eigenvalues of the magnetization block with `k` down spins, ascending.
    pub fn sector_eigenvalues(&self, k: usize) -> Vec<f64> {
        let mut v = self.blocks.get(k).map(|b| b.values.clone()).unwrap_or_default();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `e^{-iHt} ψ`; empty sectors are skipped.
    pub fn evolve(&self, psi: &DVector<C64>, t: f64) -> Result<DVector<C64>> {
        check_dimension(1 << self.sites, psi.len())?;
        if t == 0.0 {
            return Ok(psi.clone());
        }
        let mut out = DVector::<C64>::zeros(psi.len());
        for b in &self.blocks {
            let local = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| psi[i]));
            if local.iter().all(|z| *z == zero()) {
                continue;
            }
            let mut coeffs = b.vectors.adjoint() * local;
            for (c, e) in coeffs.iter_mut().zip(&b.values) {
                *c *= C64::from_polar(1.0, -e * t);
            }
            let back = &b.vectors * coeffs;
            for (k, &i) in b.indices.iter().enumerate() {
                out[i] = back[k];
            }
        }
        Ok(out)
    }

    /// Dense `e^{-iHt}`.
    pub fn unitary(&self, t: f64) -> Result<DenseOperator> {
        let dim = 1usize << self.sites;
        let mut u = DMatrix::<C64>::zeros(dim, dim);
        for b in &self.blocks {
            let phases = DMatrix::from_diagonal(&DVector::from_iterator(
                b.values.len(),
                b.values.iter().map(|e| C64::from_polar(1.0, -e * t)),
            ));
            let local = &b.vectors * phases * b.vectors.adjoint();
            for (c, &ic) in b.indices.iter().enumerate() {
                for (r, &ir) in b.indices.iter().enumerate() {
                    u[(ir, ic)] = local[(r, c)];
                }
            }
        }
        Ok(DenseOperator { sites: self.sites, matrix: u })
    }
}

/// Magnetization blocks of a conserving unitary, applied by repeated products.
#[derive(Debug, Clone)]
pub struct BlockUnitary {
    sites: usize,
    blocks: Vec<(Vec<usize>, DMatrix<C64>)>,
}

impl BlockUnitary {
    pub fn of(u: &DenseOperator) -> Result<Self> {
        let residual = u.unitarity_residual();
        if residual > OPERATOR_TOL {
            return Err(Error::Domain(format!("operator is not unitary (residual {residual:.3e})")));
        }
        check_conserving(u)?;
        let blocks = magnetization_sectors(u.sites)
            .into_iter()
            .map(|indices| {
                let m = extract_block(&u.matrix, &indices);
                (indices, m)
            })
            .collect();
        Ok(Self { sites: u.sites, blocks })
    }

    pub fn apply_times(&self, psi: &DVector<C64>, times: usize) -> Result<DVector<C64>> {
        check_dimension(1 << self.sites, psi.len())?;
        let mut cur = psi.clone();
        for _ in 0..times {
            let mut next = DVector::<C64>::zeros(cur.len());
            for (indices, m) in &self.blocks {
                block_matvec(indices, m, &cur, &mut next);
            }
            cur = next;
        }
        Ok(cur)
    }
}

/// `e^{-iHt} ψ` for a Hermitian generator.
pub fn evolve_pure(psi: &DVector<C64>, generator: &DenseOperator, t: f64) -> Result<DVector<C64>> {
    check_dimension(generator.dimension(), psi.len())?;
    Spectrum::of(generator)?.evolve(psi, t)
}

/// `U ρ U†`
pub fn evolve_density(rho: &FullDensity, u: &DenseOperator) -> Result<FullDensity> {
    check_dimension(u.dimension(), rho.matrix.nrows())?;
    Ok(FullDensity {
        matrix: &u.matrix * &rho.matrix * u.matrix.adjoint(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullDensity {
    matrix: DMatrix<C64>,
}

pub const DENSITY_TOL: f64 = 1e-9;

impl FullDensity {
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        sites_of_dimension(psi.len())?;
        Ok(Self {
            matrix: psi * psi.adjoint(),
        })
    }

    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        DenseOperator::from_matrix(matrix.clone())?;
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).max_norm()
    }

    /// Dense Hermitian eigendecomposition; slow beyond a few hundred states.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn expectation(&self, psi: &DVector<C64>) -> Result<f64> {
        check_dimension(self.matrix.nrows(), psi.len())?;
        Ok((psi.adjoint() * &self.matrix * psi)[(0, 0)].re)
    }

    pub fn is_physical(&self) -> bool {
        (self.trace() - 1.0).abs() <= DENSITY_TOL
            && self.hermiticity_residual() <= DENSITY_TOL
            && self.min_eigenvalue() >= -DENSITY_TOL
    }
}

/// `Σ_i E_i ρ E_i†` with every `E_i` acting on site `m`.
pub fn apply_kraus(rho: &FullDensity, channel: &KrausChannel, m: Site) -> Result<FullDensity> {
    let mut acc = DMatrix::<C64>::zeros(rho.matrix.nrows(), rho.matrix.ncols());
    for e in channel.operators() {
        let left = apply_site_columns(&rho.matrix, e, m)?;
        acc += apply_site_columns(&left.adjoint(), e, m)?;
    }
    Ok(FullDensity { matrix: acc })
}

/// Background dynamics of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Chain(ChainSpec),
    Harper(HarperParams),
}

impl Model {
    pub fn sites(&self) -> Option<usize> {
        match self {
            Model::Chain(c) => c.sites(),
            Model::Harper(p) => Some(p.sites),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: Model,
    pub state: InitialState,
    pub events: Vec<QdpEvent>,
    /// Time (chain) or kick count (Harper) at which the overlap is taken.
    pub total: Epoch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub echo: f64,
    /// `|L(total) - L(total + shift)|`
    pub drift: f64,
}

enum Engine {
    Hamiltonian(Spectrum),
    Floquet(BlockUnitary),
}

/// Dense evolution prepared once per model and reused across scenarios.
pub struct Oracle {
    model: Model,
    sites: usize,
    engine: Engine,
}

enum Mixed {
    Ensemble(Vec<(f64, DVector<C64>)>),
    Dense(DMatrix<C64>),
}

impl Oracle {
    pub fn new(model: Model) -> Result<Self> {
        let sites = model.sites().ok_or(Error::InfiniteChain)?;
        check_sites(sites)?;
        let engine = match &model {
            Model::Chain(chain) => Engine::Hamiltonian(Spectrum::of(&build_xxz(chain)?)?),
            Model::Harper(params) => Engine::Floquet(BlockUnitary::of(&build_floquet(params)?)?),
        };
        Ok(Self { model, sites, engine })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    fn span(&self, from: f64, to: f64) -> Result<Step> {
        match self.engine {
            Engine::Hamiltonian(_) => Ok(Step::Time(to - from)),
            Engine::Floquet(_) => {
                let kicks = to - from;
                if kicks.fract() != 0.0 {
                    return Err(Error::Usage("Harper scenarios take kick-count epochs".into()));
                }
                Ok(Step::Kicks(kicks as usize))
            }
        }
    }

    fn advance(&self, psi: &DVector<C64>, step: Step) -> Result<DVector<C64>> {
        match (&self.engine, step) {
            (Engine::Hamiltonian(s), Step::Time(t)) => s.evolve(psi, t),
            (Engine::Floquet(u), Step::Kicks(n)) => u.apply_times(psi, n),
            _ => unreachable!("span() matches the engine"),
        }
    }

    fn advance_mixed(&self, state: Mixed, step: Step) -> Result<Mixed> {
        match state {
            Mixed::Ensemble(members) => Ok(Mixed::Ensemble(
                members
                    .into_iter()
                    .map(|(w, v)| Ok((w, self.advance(&v, step)?)))
                    .collect::<Result<_>>()?,
            )),
            Mixed::Dense(rho) => {
                // U ρ U† = U (U ρ)† for Hermitian ρ
                let left = self.advance_columns(&rho, step)?;
                Ok(Mixed::Dense(self.advance_columns(&left.adjoint(), step)?))
            }
        }
    }

    fn advance_columns(&self, m: &DMatrix<C64>, step: Step) -> Result<DMatrix<C64>> {
        let mut out = m.clone();
        for c in 0..m.ncols() {
            let col = m.column(c).into_owned();
            if col.iter().all(|z| *z == zero()) {
                continue;
            }
            out.set_column(c, &self.advance(&col, step)?);
        }
        Ok(out)
    }

    fn apply_event(&self, state: Mixed, event: &QdpEvent) -> Result<Mixed> {
        match (&event.kind, state) {
            (QdpKind::Coherent(gate), Mixed::Ensemble(members)) => Ok(Mixed::Ensemble(
                members
                    .into_iter()
                    .map(|(w, v)| Ok((w, apply_gate(&v, gate, event.site)?)))
                    .collect::<Result<_>>()?,
            )),
            (QdpKind::Coherent(gate), Mixed::Dense(rho)) => {
                let g = gate.matrix();
                let left = apply_site_columns(&rho, &g, event.site)?;
                Ok(Mixed::Dense(apply_site_columns(&left.adjoint(), &g, event.site)?))
            }
            (QdpKind::Incoherent(channel), Mixed::Ensemble(members)) => {
                let mut next = Vec::with_capacity(members.len() * channel.operators().len());
                for (w, v) in &members {
                    for e in channel.operators() {
                        let branch = apply_site(v, e, event.site)?;
                        let weight = branch.norm_squared();
                        if weight > 0.0 {
                            next.push((w * weight, branch / C64::from(weight.sqrt())));
                        }
                    }
                }
                if next.len() > ENSEMBLE_LIMIT {
                    let dim = 1usize << self.sites;
                    let mut rho = DMatrix::<C64>::zeros(dim, dim);
                    for (w, v) in &next {
                        rho += v * v.adjoint() * C64::from(*w);
                    }
                    return Ok(Mixed::Dense(rho));
                }
                Ok(Mixed::Ensemble(next))
            }
            (QdpKind::Incoherent(channel), Mixed::Dense(rho)) => {
                let rho = FullDensity { matrix: rho };
                Ok(Mixed::Dense(apply_kraus(&rho, channel, event.site)?.matrix))
            }
        }
    }

    fn overlap(&self, state: &Mixed, reference: &DVector<C64>) -> f64 {
        match state {
            Mixed::Ensemble(members) => members.iter().map(|(w, v)| w * reference.dotc(v).norm_sqr()).sum(),
            Mixed::Dense(rho) => (reference.adjoint() * rho * reference)[(0, 0)].re,
        }
    }

    /// Echo of `state` under `events`, evaluated at `total` and once more
    /// after a further shift to measure drift.
    pub fn report(&self, state: &InitialState, events: &[QdpEvent], total: Epoch) -> Result<OracleReport> {
        let psi0 = embed_state(state, self.sites)?;
        let mut now = 0.0;
        let mut mixed = Mixed::Ensemble(vec![(1.0, psi0.clone())]);
        for event in events {
            self.check_event(event)?;
            let at = event.epoch.as_f64();
            if at < now {
                return Err(Error::UnorderedEvents);
            }
            mixed = self.advance_mixed(mixed, self.span(now, at)?)?;
            mixed = self.apply_event(mixed, event)?;
            now = at;
        }
        let end = total.as_f64();
        if end < now {
            return Err(Error::UnorderedEvents);
        }
        let mixed = self.advance_mixed(mixed, self.span(now, end)?)?;
        let reference = self.advance(&psi0, self.span(0.0, end)?)?;
        let echo = self.overlap(&mixed, &reference);

        let shift = self.span(0.0, DRIFT_SHIFT)?;
        let later = self.advance_mixed(mixed, shift)?;
        let reference_later = self.advance(&reference, shift)?;
        let drift = (self.overlap(&later, &reference_later) - echo).abs();
        Ok(OracleReport { echo, drift })
    }

    /// Echo at `total`, rejecting results that drift after the last event.
    pub fn echo(&self, state: &InitialState, events: &[QdpEvent], total: Epoch) -> Result<f64> {
        let report = self.report(state, events, total)?;
        if report.drift > DRIFT_TOL {
            return Err(Error::Domain(format!(
                "echo changed by {:.3e} after the last QDP",
                report.drift
            )));
        }
        Ok(report.echo)
    }

    fn check_event(&self, event: &QdpEvent) -> Result<()> {
        check_site(self.sites, event.site)?;
        match (&self.model, event.epoch) {
            (Model::Chain(_), Epoch::Time(_)) | (Model::Harper(_), Epoch::Kicks(_)) => Ok(()),
            (Model::Chain(_), Epoch::Kicks(_)) => Err(Error::Usage("chain scenarios take time epochs".into())),
            (Model::Harper(_), Epoch::Time(_)) => Err(Error::Usage("Harper scenarios take kick-count epochs".into())),
        }
    }
}

/// Extra evolution used for the drift check: a time for chains, kicks for Harper.
const DRIFT_SHIFT: f64 = 3.0;

#[derive(Debug, Clone, Copy)]
enum Step {
    Time(f64),
    Kicks(usize),
}

pub fn oracle_echo(scenario: &Scenario) -> Result<f64> {
    Oracle::new(scenario.model)?.echo(&scenario.state, &scenario.events, scenario.total)
}
