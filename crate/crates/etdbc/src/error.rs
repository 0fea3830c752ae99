use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state coincides with a primary (r{which} = 0)")]
    CollisionSingularity { which: u8 },

    #[error("expected state in {expected:?} frame, got {got:?}")]
    FrameMismatch {
        expected: crate::cr3bp::Frame,
        got: crate::cr3bp::Frame,
    },

    #[error("root solver failed to converge on bracket [{lo}, {hi}]")]
    RootSolver { lo: f64, hi: f64 },

    #[error("degenerate orbit: {0}")]
    DegenerateOrbit(&'static str),

    #[error("velocity declination at pole: planar component undefined")]
    PoleCase,

    #[error("point on the vertical axis through the secondary: injection angle undefined")]
    AxisSingularity,

    #[error("step size underflow at t = {t} (near-singular passage)")]
    StepUnderflow { t: f64 },

    #[error("maximum step count exceeded at t = {t}")]
    MaxSteps { t: f64 },

    #[error("epoch {t} s outside ephemeris coverage [{lo}, {hi}] s")]
    OutOfCoverage { t: f64, lo: f64, hi: f64 },

    #[error("near-parabolic reference orbit (e = {e}): metric formulas are singular")]
    NearParabolic { e: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no capture kernel found at gamma = {gamma}")]
    NoKernel { gamma: f64 },

    #[error("schema mismatch: expected version {expected}, found {found}")]
    SchemaMismatch { expected: u32, found: u32 },

    #[error("duplicate record key: slice ({gamma}, {z}, {zeta}), cell ({ix}, {iy}), branch {branch}")]
    DuplicateKey {
        gamma: f64,
        z: f64,
        zeta: f64,
        ix: i64,
        iy: i64,
        branch: u8,
    },

    #[error("malformed file {path}: {reason}")]
    Malformed { path: String, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
