//! Loschmidt echo of local quantum dynamical processes (QDPs) in spin chains.
//!
//! A QDP is an instantaneous single-site operation, either an incoherent Kraus
//! channel or a coherent unitary gate, that interrupts the background dynamics.
//! The echo measures how much of the initial state can be recovered by running
//! the uninterrupted dynamics backwards.
//!
//! * [`propagators`]: one-magnon Green functions of the XXZ/XY ring.
//! * [`channels`]: Kraus channels and coherent gates acting on one site.
//! * [`echo`]: closed-form echoes for the integrable chain, single and sequential QDPs.
//! * [`harper`]: kicked Harper Floquet propagators and the echoes built from them.
//! * [`oracle`]: dense full-Hilbert-space reference for small chains.

pub mod channels;
pub mod echo;
mod error;
pub mod harper;
pub mod oracle;
pub mod propagators;

pub use num_complex::Complex64 as C64;

pub use channels::{ChannelLabel, CoherentGate, Epoch, KrausChannel, QdpEvent, QdpKind, QdpSequence};
pub use echo::{EchoAxis, EchoSeries, InitialState, SectorDensity, SectorState};
pub use error::{Error, Result};
pub use harper::HarperParams;
pub use propagators::{ChainSize, ChainSpec, Propagator, Site};

/// Largest entry modulus of a complex matrix or vector.
pub(crate) trait MaxNorm {
    fn max_norm(&self) -> f64;
}

impl<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, C>> MaxNorm for nalgebra::Matrix<C64, R, C, S> {
    fn max_norm(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}
