use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("defining polynomial is not irreducible over Q: {0}")]
    ReduciblePolynomial(String),
    #[error("integral basis has non-integral index or inconsistent discriminant")]
    BadIntegralBasis,
    #[error("elements belong to different number field specs")]
    FieldMismatch,
    #[error("element is zero")]
    ZeroElement,
    #[error("division by a non-invertible element")]
    NotInvertible,
    #[error("{0} divides the index of the integral basis: supply its splitting in the config")]
    IndexDivisor(u64),
    #[error("denominator is not invertible at the given prime")]
    NotIntegralAtPrime,
    #[error("residue maps at index-divisor primes of residue degree > 1 are not supported")]
    ResidueAtIndexDivisor,
    #[error("cannot factor zero")]
    FactorZero,
    #[error("unfactored composite cofactor {0}; treat the verdict as undetermined")]
    UnfactoredCofactor(String),
    #[error("curve model is singular")]
    SingularModel,
    #[error("curve has bad reduction at the given prime")]
    BadReduction,
    #[error("no uniformizer supplied for a prime above {0}; required at residue characteristic 2 and 3")]
    MissingUniformizer(u64),
    #[error("supplied uniformizer does not generate the prime exactly")]
    BadUniformizer,
    #[error("field size {0} exceeds the configured point-counting ceiling {1}")]
    CountCeiling(u64, u64),
    #[error("exhaustive torsion enumeration needs q <= 2^20, got {0}")]
    TorsionCeiling(u64),
    #[error("unit has infinite order hypothesis violated: u^k = 1")]
    UnitTorsion,
    #[error("unit is not totally positive or not a unit")]
    BadUnit,
    #[error("model does not have full 2-torsion in factored form")]
    NotFactoredModel,
    #[error("reduction type could not be settled by the substitution loop; reporting unclassified")]
    Unclassified,
    #[error("the 2-division cubic has a repeated root mod the witness prime")]
    DegenerateWitness,
    #[error("ray class order for modulus {0} missing from config")]
    MissingRayClassOrder(String),
    #[error("search budget exhausted: {0}")]
    Budget(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
