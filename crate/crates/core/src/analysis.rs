//! Scalar measurements on density profiles used to characterise waves.

/// Sub-cell location and height of the global maximum, refined by the parabola
/// through the maximum and its two neighbours (wrapping when `periodic`).
pub fn peak(x: &[f64], rho: &[f64], periodic: bool) -> (f64, f64) {
    let n = rho.len();
    let i = rho.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    let (l, r) = match (i, periodic) {
        (0, false) | (_, false) if i == 0 || i + 1 == n => return (x[i], rho[i]),
        _ => ((i + n - 1) % n, (i + 1) % n),
    };
    let (a, b, c) = (rho[l], rho[i], rho[r]);
    let curv = a - 2.0 * b + c;
    if curv >= 0.0 {
        return (x[i], b);
    }
    let offset = 0.5 * (a - c) / curv;
    let dx = if n > 1 { x[1] - x[0] } else { 0.0 };
    (x[i] + offset * dx, b - 0.25 * (a - c) * offset)
}

/// `sum |rho_{j+1} - rho_j|`, including the wrap-around jump when `periodic`.
pub fn total_variation(rho: &[f64], periodic: bool) -> f64 {
    let tv: f64 = rho.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    if periodic && rho.len() > 1 {
        tv + (rho[0] - rho[rho.len() - 1]).abs()
    } else {
        tv
    }
}

/// `dx * sum |a - b|`
pub fn l1_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum::<f64>() * dx
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Averages pairs of cells: the restriction of a profile on `2n` cells onto `n`.
pub fn coarsen(fine: &[f64]) -> Vec<f64> {
    fine.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

/// Narrowest 10%-90% transition of an increasing jump from `lo` to `hi`:
/// the shortest distance between a crossing of the 10% level and a later
/// crossing of the 90% level, with crossings located by linear interpolation.
pub fn transition_width(x: &[f64], rho: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let l10 = lo + 0.1 * (hi - lo);
    let l90 = lo + 0.9 * (hi - lo);
    let crossings = |level: f64| -> Vec<f64> {
        rho.windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] < level && w[1] >= level)
            .map(|(j, w)| x[j] + (x[j + 1] - x[j]) * (level - w[0]) / (w[1] - w[0]))
            .collect()
    };
    let (c10, c90) = (crossings(l10), crossings(l90));
    c10.iter()
        .filter_map(|&a| c90.iter().filter(|&&b| b >= a).map(|&b| b - a).reduce(f64::min))
        .reduce(f64::min)
}
