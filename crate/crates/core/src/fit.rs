//! Small least-squares helpers.

/// Result of an ordinary least-squares line fit `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

/// Fits a straight line. Returns `None` for fewer than two points or a
/// degenerate abscissa.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Some(LineFit { slope, intercept, rms })
}

/// Fits `y = Σ c_k x^{p_k}` for the given exponents by normal equations.
pub fn power_basis_fit(xs: &[f64], ys: &[f64], exponents: &[i32]) -> Option<Vec<f64>> {
    let m = exponents.len();
    if xs.len() < m || ys.len() != xs.len() {
        return None;
    }
    // column scaling keeps the normal equations conditioned on small x
    let scale: Vec<f64> = exponents
        .iter()
        .map(|&p| xs.iter().map(|x| x.powi(p).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE))
        .collect();
    let mut a = nalgebra::DMatrix::<f64>::zeros(xs.len(), m);
    for (i, x) in xs.iter().enumerate() {
        for (j, &p) in exponents.iter().enumerate() {
            a[(i, j)] = x.powi(p) / scale[j];
        }
    }
    let b = nalgebra::DVector::from_column_slice(ys);
    let qr = a.clone().qr();
    let qtb = qr.q().transpose() * b;
    let r = qr.r();
    let c = r.solve_upper_triangular(&qtb)?;
    Some(c.iter().zip(&scale).map(|(c, s)| c / s).collect())
}

/// `count` logarithmically spaced points from `start` to `end` inclusive.
pub fn logspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let (a, b) = (start.ln(), end.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

/// `count` evenly spaced points from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    (0..count)
        .map(|k| start + (end - start) * k as f64 / (count - 1) as f64)
        .collect()
}
