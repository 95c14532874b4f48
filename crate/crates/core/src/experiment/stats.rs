//! Summary statistics for visibility series.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Sample autocorrelation at `lag` of the mean-removed series, normalized by
/// the lag-0 value. `None` for a constant series.
pub fn autocorrelation(xs: &[f64], lag: usize) -> Option<f64> {
    Autocorrelation::new(xs)?.at(lag)
}

struct Autocorrelation {
    centered: Vec<f64>,
    c0: f64,
}

impl Autocorrelation {
    fn new(xs: &[f64]) -> Option<Self> {
        let m = mean(xs);
        let centered: Vec<f64> = xs.iter().map(|x| x - m).collect();
        let c0: f64 = centered.iter().map(|x| x * x).sum();
        (c0 > 0.0).then_some(Self { centered, c0 })
    }

    fn at(&self, lag: usize) -> Option<f64> {
        if lag >= self.centered.len() {
            return None;
        }
        let ck: f64 = self.centered.iter().zip(&self.centered[lag..]).map(|(a, b)| a * b).sum();
        Some(ck / self.c0)
    }
}

/// First lag (in samples) at which the autocorrelation drops below `1/e`.
/// Constant series, or series that never decorrelate, are censored at their
/// length.
pub fn decorrelation_lag(xs: &[f64]) -> usize {
    let threshold = (-1.0f64).exp();
    let Some(acf) = Autocorrelation::new(xs) else {
        return xs.len();
    };
    (1..xs.len())
        .find(|&lag| acf.at(lag).is_some_and(|r| r < threshold))
        .unwrap_or(xs.len())
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson correlation of the ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (rx, ry) = (ranks(xs), ranks(ys));
    let (mx, my) = (mean(&rx), mean(&ry));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}
