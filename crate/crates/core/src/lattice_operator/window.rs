use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a finite window stands in for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowIntent {
    Finite,
    LeftHalflineTruncated,
    RightHalflineTruncated,
    FullLineTruncated,
}

/// Closed integer interval `[lo, hi]` of lattice sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    lo: i64,
    hi: i64,
    intent: WindowIntent,
    truncation_error_budget: f64,
}

impl Window {
    pub fn finite(lo: i64, hi: i64) -> Result<Self> {
        Self::with_intent(lo, hi, WindowIntent::Finite)
    }

    pub fn with_intent(lo: i64, hi: i64, intent: WindowIntent) -> Result<Self> {
        if lo > hi {
            return Err(Error::EmptyWindow { lo, hi });
        }
        Ok(Self {
            lo,
            hi,
            intent,
            truncation_error_budget: 0.0,
        })
    }

    /// Window of `size` sites centred on the origin (`[-size/2, size - size/2 - 1]`).
    pub fn centered(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyWindow { lo: 0, hi: -1 });
        }
        let lo = -((size / 2) as i64);
        Self::finite(lo, lo + size as i64 - 1)
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.truncation_error_budget = budget;
        self
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn intent(&self) -> WindowIntent {
        self.intent
    }

    pub fn truncation_error_budget(&self) -> f64 {
        self.truncation_error_budget
    }

    pub fn size(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn contains(&self, n: i64) -> bool {
        (self.lo..=self.hi).contains(&n)
    }

    /// Matrix index of site `n`.
    pub fn index(&self, n: i64) -> Option<usize> {
        self.contains(n).then(|| (n - self.lo) as usize)
    }

    pub fn site(&self, i: usize) -> i64 {
        self.lo + i as i64
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self {
            lo: self.lo + by,
            hi: self.hi + by,
            ..*self
        }
    }

    /// `[-hi, -lo]`.
    pub fn reflected(&self) -> Self {
        let intent = match self.intent {
            WindowIntent::LeftHalflineTruncated => WindowIntent::RightHalflineTruncated,
            WindowIntent::RightHalflineTruncated => WindowIntent::LeftHalflineTruncated,
            other => other,
        };
        Self {
            lo: -self.hi,
            hi: -self.lo,
            intent,
            ..*self
        }
    }
}
