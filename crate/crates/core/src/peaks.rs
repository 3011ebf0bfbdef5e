//! Local maxima of sampled spectra.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    /// Vertex of the parabola through the sample and its neighbours.
    pub x: f64,
    pub height: f64,
    /// Height above the higher of the two flanking minima.
    pub prominence: f64,
}

/// Strict interior local maxima, in order of `x`.
pub fn find_peaks(x: &[f64], y: &[f64]) -> Vec<Peak> {
    let n = x.len().min(y.len());
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
        let den = a - 2.0 * b + c;
        let off = if den != 0.0 {
            (0.5 * (a - c) / den).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        let h = if off >= 0.0 { x[i + 1] - x[i] } else { x[i] - x[i - 1] };
        let mut left = b;
        for j in (0..i).rev() {
            if y[j] > b {
                break;
            }
            left = left.min(y[j]);
        }
        let mut right = b;
        for &v in &y[i + 1..n] {
            if v > b {
                break;
            }
            right = right.min(v);
        }
        out.push(Peak {
            index: i,
            x: x[i] + off * h,
            height: b - 0.25 * (a - c) * off,
            prominence: b - left.max(right),
        });
    }
    out
}

/// Peaks whose prominence is at least `factor` times the median of `y`.
pub fn prominent_peaks(x: &[f64], y: &[f64], factor: f64) -> Vec<Peak> {
    let m = median(y);
    find_peaks(x, y)
        .into_iter()
        .filter(|p| p.prominence >= factor * m)
        .collect()
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (my - slope * mx, slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex_is_exact() {
        let x: Vec<f64> = (0..21).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - (v - 1.234).powi(2)).collect();
        let p = find_peaks(&x, &y);
        assert_eq!(p.len(), 1);
        assert!((p[0].x - 1.234).abs() < 1e-12);
        assert!((p[0].height - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_lorentzians_are_resolved() {
        let x: Vec<f64> = (0..400).map(|i| 1.0 + i as f64 * 0.001).collect();
        let lor = |v: f64, c: f64| 1.0 / (1.0 + ((v - c) / 0.005).powi(2));
        let y: Vec<f64> = x.iter().map(|&v| 0.05 + lor(v, 1.15) + 0.8 * lor(v, 1.2)).collect();
        let p = prominent_peaks(&x, &y, 2.0);
        assert_eq!(p.len(), 2);
        assert!((p[0].x - 1.15).abs() < 1e-3 && (p[1].x - 1.2).abs() < 1e-3);
    }

    #[test]
    fn monotone_data_has_no_peaks() {
        let x = [0.0, 1.0, 2.0, 3.0];
        assert!(find_peaks(&x, &[1.0, 2.0, 3.0, 4.0]).is_empty());
    }

    #[test]
    fn fit_recovers_a_line() {
        let x = [0.05, 0.1, 0.2, 0.3];
        let y: Vec<f64> = x.iter().map(|v| 0.2 + 1.5 * v).collect();
        let (a, b, r2) = linear_fit(&x, &y);
        assert!((a - 0.2).abs() < 1e-12 && (b - 1.5).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }
}
