//! `start:stop:count` grids, inclusive of both endpoints.

use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            1 => vec![self.start],
            n => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        self.stop
                    } else {
                        self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("grid `{s}` is not start:stop:count"));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| format!("grid `{s}`: bad number `{x}`: {e}"))
        };
        let (start, stop) = (num(a)?, num(b)?);
        let count: usize = n
            .trim()
            .parse()
            .map_err(|e| format!("grid `{s}`: bad count `{n}`: {e}"))?;
        if count == 0 {
            return Err(format!("grid `{s}`: count must be positive"));
        }
        if !start.is_finite() || !stop.is_finite() || (count > 1 && start == stop) {
            return Err(format!("grid `{s}`: degenerate range"));
        }
        Ok(Grid { start, stop, count })
    }
}
