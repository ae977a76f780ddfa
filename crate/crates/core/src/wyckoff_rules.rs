//! Deterministic Wyckoff structure rules: the trading-range validity
//! predicate and swing-point extraction from raw price series.

use thiserror::Error;

/// A local strict extremum of a price series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingPoint {
    pub index: usize,
    pub price: f64,
    pub kind: SwingKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwingKind {
    High,
    Low,
}

/// Ordered swing points plus the length of the series they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SwingSeries {
    pub points: Vec<SwingPoint>,
    pub source_len: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum SwingError {
    #[error("series of length {len} too short for window k={k} (need at least {min})")]
    TooShort { len: usize, k: usize, min: usize },
    #[error("window k must be at least 1")]
    ZeroWindow,
}

/// The trading-range predicate over [p1, p2, p3, p4]:
/// p1 > p2, p2 < p3, p4 < p3, p3 < p1, p4 > p2. Equivalent to the total
/// order p2 < p4 < p3 < p1 when all components are distinct.
///
/// Non-finite inputs are rejected as invalid.
pub fn tr_valid(p: &[f64]) -> bool {
    if p.len() != 4 || p.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let (p1, p2, p3, p4) = (p[0], p[1], p[2], p[3]);
    p1 > p2 && p2 < p3 && p4 < p3 && p3 < p1 && p4 > p2
}

/// Marks index `i` a swing high when `prices[i]` strictly exceeds every
/// price within `k` positions on both sides, and a swing low symmetrically.
/// Same-kind runs are collapsed to their most extreme member so the output
/// alternates high/low.
pub fn extract_swings(prices: &[f64], k: usize) -> Result<SwingSeries, SwingError> {
    if k == 0 {
        return Err(SwingError::ZeroWindow);
    }
    let min = 2 * k + 1;
    if prices.len() < min {
        return Err(SwingError::TooShort {
            len: prices.len(),
            k,
            min,
        });
    }

    let mut raw = Vec::new();
    for i in k..prices.len() - k {
        let window = prices[i - k..=i + k]
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, v)| *v);
        let p = prices[i];
        if window.clone().all(|v| p > v) {
            raw.push(SwingPoint {
                index: i,
                price: p,
                kind: SwingKind::High,
            });
        } else if window.clone().all(|v| p < v) {
            raw.push(SwingPoint {
                index: i,
                price: p,
                kind: SwingKind::Low,
            });
        }
    }

    // Collapse same-kind runs, keeping the most extreme swing of each run.
    let mut points: Vec<SwingPoint> = Vec::with_capacity(raw.len());
    for sp in raw {
        match points.last_mut() {
            Some(last) if last.kind == sp.kind => {
                let replace = match sp.kind {
                    SwingKind::High => sp.price > last.price,
                    SwingKind::Low => sp.price < last.price,
                };
                if replace {
                    *last = sp;
                }
            }
            _ => points.push(sp),
        }
    }

    Ok(SwingSeries {
        points,
        source_len: prices.len(),
    })
}

/// Sliding windows of `width` consecutive swing prices, each paired with
/// the source index of the window's last swing. Fewer swings than `width`
/// yields an empty list.
pub fn windows_of_lows_highs(s: &SwingSeries, width: usize) -> Vec<(Vec<f64>, usize)> {
    if width == 0 || s.points.len() < width {
        return Vec::new();
    }
    s.points
        .windows(width)
        .map(|w| {
            let values = w.iter().map(|sp| sp.price).collect();
            (values, w.last().unwrap().index)
        })
        .collect()
}
