use std::sync::RwLock;

use serde::Serialize;

use super::{compose_with_budget, strip_content, RationalMap, DEFAULT_TERM_BUDGET};
use crate::error::{Error, Result};

/// Degrees `deg(f^n)` of the reduced iterates, `n = 1..=N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeSequence(pub Vec<u32>);

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub degree: u32,
    pub degrees: Vec<u32>,
    /// `(n, d^n, deg f^n)` at the first `n` where they differ.
    pub first_failure: Option<(u32, u64, u32)>,
}

/// Memoized reduced iterates of one map.
///
/// Iterates are built once, in order, and then shared; readers take a read
/// lock, the first caller needing a deeper iterate extends the memo.
pub struct Iterates {
    base: RationalMap,
    budget: usize,
    memo: RwLock<Vec<RationalMap>>,
}

impl Iterates {
    pub fn new(base: RationalMap) -> Self {
        Self::with_budget(base, DEFAULT_TERM_BUDGET)
    }

    pub fn with_budget(base: RationalMap, budget: usize) -> Self {
        Iterates { base, budget, memo: RwLock::new(Vec::new()) }
    }

    pub fn base(&self) -> &RationalMap {
        &self.base
    }

    /// Reduced `f^n` for `n >= 1`.
    pub fn get(&self, n: u32) -> Result<RationalMap> {
        if n == 0 {
            return Err(Error::Usage("iterate exponent must be at least 1".into()));
        }
        let idx = n as usize - 1;
        if let Some(m) = self.memo.read().expect("memo lock").get(idx) {
            return Ok(m.clone());
        }
        let mut memo = self.memo.write().expect("memo lock");
        if memo.is_empty() {
            memo.push(strip_content(&self.base)?);
        }
        while memo.len() <= idx {
            let prev = memo.last().expect("nonempty");
            let with_partial = |e| match e {
                Error::Resource { what, partial } => Error::Resource {
                    what,
                    partial: format!(
                        "computed f^1..f^{} with degrees {:?}; {partial}",
                        memo.len(),
                        memo.iter().map(RationalMap::degree).collect::<Vec<_>>()
                    ),
                },
                other => other,
            };
            let raw = compose_with_budget(&self.base, prev, self.budget).map_err(with_partial)?;
            let next = strip_content(&raw)
                .map_err(with_partial)?
                .with_name(format!("{}^{}", self.base.name(), memo.len() + 1));
            memo.push(next);
        }
        Ok(memo[idx].clone())
    }

    pub fn degree_sequence(&self, n: u32) -> Result<DegreeSequence> {
        if n == 0 {
            return Err(Error::Usage("sequence length must be at least 1".into()));
        }
        self.get(n)?;
        let memo = self.memo.read().expect("memo lock");
        Ok(DegreeSequence(memo[..n as usize].iter().map(RationalMap::degree).collect()))
    }

    pub fn stability(&self, n: u32) -> Result<StabilityReport> {
        let seq = self.degree_sequence(n)?;
        let d = seq.0[0];
        let mut first_failure = None;
        let mut expected: u64 = 1;
        for (i, &got) in seq.0.iter().enumerate() {
            expected = expected.saturating_mul(d as u64);
            if got as u64 != expected {
                first_failure = Some((i as u32 + 1, expected, got));
                break;
            }
        }
        Ok(StabilityReport { stable: first_failure.is_none(), degree: d, degrees: seq.0, first_failure })
    }
}
