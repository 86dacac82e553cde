use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,
    #[error("generator {index} is not homogeneous of degree {degree}")]
    NotHomogeneous { index: usize, degree: i32 },
    #[error("degree {degree} exceeds the cap {cap}")]
    CapExceeded { degree: i32, cap: i32 },
    #[error("cap {0} must be even")]
    OddCap(i32),
    #[error("ambient modules do not match")]
    AmbientMismatch,
    #[error("map entry ({row}, {col}) is incompatible with the gradings: {reason}")]
    DegreeMismatch { row: usize, col: usize, reason: String },
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("invalid moment graph: {0}")]
    InvalidGraph(String),
    #[error("graph is not GKM at vertex `{vertex}`")]
    NotGkm { vertex: String },
    #[error("coxeter data: {0}")]
    Coxeter(String),
    #[error("quotient has more than {0} elements; infinite or too large")]
    TooLarge(usize),
    #[error("sheaf is not generated by global sections: {0}")]
    NotGloballyGenerated(String),
    #[error("cap too small: generator at degree {degree} with cap {cap} near vertex `{vertex}`")]
    CapTooSmall { vertex: String, degree: i32, cap: i32 },
    #[error("quotient is not torsion free: {0}")]
    Torsion(String),
    #[error("maps are not coordinate compatible: {0}")]
    Incompatible(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
