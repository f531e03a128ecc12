use serde::Serialize;

/// Environment variable overriding [`Limits::max_behaviours`].
pub const MAX_BEHAVIOURS_ENV: &str = "BSM_MAX_BEHAVIOURS";

pub const DEFAULT_MAX_BEHAVIOURS: usize = 100_000;
pub const DEFAULT_EXHAUSTIVE_BOUND: usize = 16;

/// Cardinality caps guarding products, tensors and subset enumeration.
///
/// Exceeding a cap is always reported as [`crate::Error::Capacity`]; nothing
/// is ever silently truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Limits {
    /// Largest behaviour set any constructed system may have.
    pub max_behaviours: usize,
    /// Largest behaviour set for which every subset is enumerated.
    pub exhaustive_bound: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_behaviours: DEFAULT_MAX_BEHAVIOURS,
            exhaustive_bound: DEFAULT_EXHAUSTIVE_BOUND,
        }
    }
}

impl Limits {
    /// Defaults, with the behaviour cap taken from `BSM_MAX_BEHAVIOURS` when
    /// it is set to a positive integer.
    pub fn from_env() -> Self {
        let mut limits = Limits::default();
        if let Some(cap) = std::env::var(MAX_BEHAVIOURS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
        {
            limits.max_behaviours = cap;
        }
        limits
    }

    pub fn check(&self, what: impl Into<String>, count: u128) -> crate::Result<()> {
        if count > self.max_behaviours as u128 {
            return Err(crate::Error::Capacity {
                what: what.into(),
                count,
                cap: self.max_behaviours,
            });
        }
        Ok(())
    }
}
