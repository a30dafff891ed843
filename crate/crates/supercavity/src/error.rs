//! Error type shared by every module of the crate.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the simulator.
///
/// Variants split into two families: configuration/domain errors (the caller
/// asked for something outside the model's domain) and numeric errors (a
/// computation could not be carried out to the documented accuracy).
/// [`Error::is_numeric`] reports the family, which the CLI maps onto its
/// exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Parameter validation failed (sizes, signs, ranges).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A request fell outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Wave vectors must lie strictly inside the propagating band.
    #[error("wave vector k = {k} lies outside the open interval (0, pi)")]
    WaveVectorOutOfBand { k: f64 },

    /// Mode indices run from 1 to the number of cavities in the super cavity.
    #[error("mode index m = {m} out of range 1..={n_cavities}")]
    ModeIndexOutOfRange { m: usize, n_cavities: usize },

    /// The operation needs an atom inside the super cavity.
    #[error("operation requires an atom coupled to the super cavity")]
    NoAtom,

    /// The eliminated-atom determinant is singular too close to the atomic
    /// frequency; callers should switch to the direct solver instead.
    #[error(
        "energy E = {energy} lies within the guard band of the atomic \
         frequency omega_a = {omega_a}; the reduced determinant is unreliable here"
    )]
    PoleProximity { energy: f64, omega_a: f64 },

    /// The scattering linear system was too ill-conditioned to solve reliably.
    #[error("linear system ill-conditioned (pivot-ratio estimate {estimate:.3e})")]
    IllConditioned { estimate: f64 },

    /// Catch-all for computations that failed to reach their accuracy target.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A spectrum scan failed at a specific grid point.
    #[error("scan failed at grid index {index} (k = {k}): {source}")]
    ScanPoint {
        index: usize,
        k: f64,
        #[source]
        source: Box<Error>,
    },

    /// Peak analysis could not resolve the requested doublet.
    #[error("expected two transmission peaks but resolved {found} (threshold {threshold})")]
    SplittingNotResolved { found: usize, threshold: f64 },

    /// Two scans can only be compared point-by-point on the same grid.
    #[error("scans sample different k grids and cannot be compared")]
    GridMismatch,

    /// No eigenpair carried a dominant atomic component, so the dressed
    /// level of the two-level reduction is ambiguous.
    #[error(
        "no eigenlevel near mode {mode} carries a dominant atomic weight \
         (best {best_weight:.3}); the dressed level is ambiguous"
    )]
    AmbiguousDressedLevel { mode: usize, best_weight: f64 },
}

impl Error {
    /// `true` for failures of the numerics themselves, `false` for
    /// configuration and domain errors.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::InvalidParameter(_)
            | Error::Domain(_)
            | Error::WaveVectorOutOfBand { .. }
            | Error::ModeIndexOutOfRange { .. }
            | Error::NoAtom
            | Error::GridMismatch => false,
            Error::PoleProximity { .. }
            | Error::IllConditioned { .. }
            | Error::Numeric(_)
            | Error::SplittingNotResolved { .. }
            | Error::AmbiguousDressedLevel { .. } => true,
            Error::ScanPoint { source, .. } => source.is_numeric(),
        }
    }
}
