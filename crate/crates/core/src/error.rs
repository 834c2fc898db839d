use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("singular matrix in {0}")]
    Singular(String),
    /// Eigenvalue on a branch point of arccoth: the state is (numerically) pure.
    #[error("singular branch: {0}")]
    SingularBranch(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("letter {letter} out of range for alphabet of size {size}")]
    LetterRange { letter: usize, size: usize },
    #[error("super-word of length {len} exceeds the degree cap {cap}")]
    DegreeCap { len: usize, cap: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unsatisfiable parameter inversion: {0}")]
    Unsatisfiable(String),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64, last_state: Vec<num_complex::Complex64> },
    #[error("step limit reached at t = {t} after {steps} steps")]
    StepLimit { t: f64, steps: usize, last_state: Vec<num_complex::Complex64> },
    #[error("quadrature on [{a}, {b}] did not reach tolerance (estimated error {err:e})")]
    Quadrature { a: f64, b: f64, err: f64 },
    #[error("truncation leak: top-level population {population:e} exceeds {limit:e} at t = {t}")]
    TruncationLeak { t: f64, population: f64, limit: f64 },
}
