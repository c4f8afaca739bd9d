//! Entropy profiles of walk distributions and asymptotic rate fits.
//!
//! All entropies use natural logarithm. Probabilities are converted to f64
//! for the transcendental parts even in rational mode; the exact identities
//! live in the mass arithmetic, not here.

use std::io::{self, Write};

use super::{CosetDistribution, Kahan, LiftedDistribution, Value, WalkError};

/// Shannon and Rényi entropies plus the q-norms they are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyProfile {
    pub h: f64,
    pub per_alpha: Vec<AlphaEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEntry {
    pub alpha: f64,
    /// H_α = log(Σ ν^α) / (1 − α).
    pub renyi: f64,
    /// ‖ν‖_α = (Σ ν^α)^{1/α}.
    pub qnorm: f64,
}

fn profile_of_masses(masses: impl Iterator<Item = f64> + Clone, alphas: &[f64]) -> Result<EntropyProfile, WalkError> {
    for &a in alphas {
        if !(a > 0.0) || a == 1.0 {
            return Err(WalkError::BadMeasure(format!(
                "Rényi order {a} must be positive and different from 1"
            )));
        }
    }
    let mut h = Kahan::default();
    for m in masses.clone() {
        if m > 0.0 {
            h.add(-m * m.ln());
        }
    }
    let per_alpha = alphas
        .iter()
        .map(|&alpha| {
            let mut s = Kahan::default();
            for m in masses.clone() {
                if m > 0.0 {
                    s.add(m.powf(alpha));
                }
            }
            let sum = s.total();
            AlphaEntry {
                alpha,
                renyi: sum.ln() / (1.0 - alpha),
                qnorm: sum.powf(1.0 / alpha),
            }
        })
        .collect();
    Ok(EntropyProfile {
        h: h.total(),
        per_alpha,
    })
}

/// Profile of a coset-space distribution.
pub fn entropy_profile<V: Value>(
    nu: &CosetDistribution<V>,
    alphas: &[f64],
) -> Result<EntropyProfile, WalkError> {
    let masses: Vec<f64> = nu.masses().map(|(_, m)| m.to_f64()).collect();
    profile_of_masses(masses.iter().copied(), alphas)
}

/// Profile of the lifted law μ^{*n} on the group.
pub fn lifted_entropy_profile<V: Value>(
    lam: &LiftedDistribution<V>,
    alphas: &[f64],
) -> Result<EntropyProfile, WalkError> {
    let masses: Vec<f64> = lam.masses().map(|(_, m)| m.to_f64()).collect();
    profile_of_masses(masses.iter().copied(), alphas)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// y ≈ c·n + a.
    LinearSlope,
    /// y ≈ c·n + b·log n + a, absorbing the polynomial correction that
    /// otherwise biases the slope upward on short windows.
    SlopeWithLogCorrection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub model: FitModel,
    pub rate: f64,
    pub stderr: f64,
    /// Inclusive n-range of the fitted window.
    pub window: (u32, u32),
    /// Mean of successive difference quotients over the window; a second,
    /// fit-free estimate of the same limit.
    pub cesaro: f64,
}

/// Least-squares rate of an entropy (or log-norm) sequence against n, fit
/// on the tail window: the last half of the series but at least five
/// points where available.
pub fn rate_fit(series: &[(u32, f64)], model: FitModel) -> Result<RateFit, WalkError> {
    let needed = match model {
        FitModel::LinearSlope => 4,
        FitModel::SlopeWithLogCorrection => 4,
    };
    let usable: Vec<(u32, f64)> = series
        .iter()
        .copied()
        .filter(|&(n, _)| n > 0 || model == FitModel::LinearSlope)
        .collect();
    if usable.len() < needed {
        return Err(WalkError::InsufficientData {
            need: needed,
            got: usable.len(),
        });
    }
    let take = (usable.len() / 2).max(5).min(usable.len());
    let window = &usable[usable.len() - take..];
    let k = window.len();

    let (rate, stderr) = match model {
        FitModel::LinearSlope => {
            let xm = window.iter().map(|&(n, _)| n as f64).sum::<f64>() / k as f64;
            let ym = window.iter().map(|&(_, y)| y).sum::<f64>() / k as f64;
            let sxx: f64 = window.iter().map(|&(n, _)| (n as f64 - xm).powi(2)).sum();
            let sxy: f64 = window
                .iter()
                .map(|&(n, y)| (n as f64 - xm) * (y - ym))
                .sum();
            let c = sxy / sxx;
            let a = ym - c * xm;
            let ssr: f64 = window
                .iter()
                .map(|&(n, y)| (y - c * n as f64 - a).powi(2))
                .sum();
            let var = if k > 2 { ssr / (k - 2) as f64 } else { 0.0 };
            (c, (var / sxx).sqrt())
        }
        FitModel::SlopeWithLogCorrection => {
            // columns: n, log n, 1
            let rows: Vec<[f64; 3]> = window
                .iter()
                .map(|&(n, _)| [n as f64, (n as f64).ln(), 1.0])
                .collect();
            let ys: Vec<f64> = window.iter().map(|&(_, y)| y).collect();
            let mut ata = [[0.0f64; 3]; 3];
            let mut aty = [0.0f64; 3];
            for (r, &y) in rows.iter().zip(&ys) {
                for i in 0..3 {
                    for j in 0..3 {
                        ata[i][j] += r[i] * r[j];
                    }
                    aty[i] += r[i] * y;
                }
            }
            let inv = invert3(&ata).ok_or(WalkError::InsufficientData {
                need: needed,
                got: k,
            })?;
            let mut coef = [0.0f64; 3];
            for i in 0..3 {
                for j in 0..3 {
                    coef[i] += inv[i][j] * aty[j];
                }
            }
            let ssr: f64 = rows
                .iter()
                .zip(&ys)
                .map(|(r, &y)| {
                    let pred = coef[0] * r[0] + coef[1] * r[1] + coef[2] * r[2];
                    (y - pred).powi(2)
                })
                .sum();
            let var = if k > 3 { ssr / (k - 3) as f64 } else { 0.0 };
            (coef[0], (var * inv[0][0]).max(0.0).sqrt())
        }
    };

    let mut diffs = Kahan::default();
    let mut count = 0usize;
    for pair in window.windows(2) {
        let (n0, y0) = pair[0];
        let (n1, y1) = pair[1];
        if n1 > n0 {
            diffs.add((y1 - y0) / (n1 - n0) as f64);
            count += 1;
        }
    }
    let cesaro = if count > 0 {
        diffs.total() / count as f64
    } else {
        f64::NAN
    };

    Ok(RateFit {
        model,
        rate,
        stderr,
        window: (window[0].0, window[k - 1].0),
        cesaro,
    })
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-12 {
        return None;
    }
    let mut inv = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b, c, d) = (
                m[(j + 1) % 3][(i + 1) % 3],
                m[(j + 1) % 3][(i + 2) % 3],
                m[(j + 2) % 3][(i + 1) % 3],
                m[(j + 2) % 3][(i + 2) % 3],
            );
            inv[i][j] = (a * d - b * c) / det;
        }
    }
    Some(inv)
}

/// One row of the per-step walk report.
#[derive(Debug, Clone)]
pub struct WalkRow {
    pub n: u32,
    pub support_size: usize,
    pub profile: EntropyProfile,
}

/// CSV schema: `n,support_size,H,H_alpha_{α...},qnorm_{α...}`.
pub fn write_walk_csv<W: Write>(out: &mut W, rows: &[WalkRow]) -> io::Result<()> {
    let alphas: Vec<f64> = rows
        .first()
        .map(|row| row.profile.per_alpha.iter().map(|e| e.alpha).collect())
        .unwrap_or_default();
    write!(out, "n,support_size,H")?;
    for a in &alphas {
        write!(out, ",H_alpha_{a}")?;
    }
    for a in &alphas {
        write!(out, ",qnorm_{a}")?;
    }
    writeln!(out)?;
    for row in rows {
        write!(out, "{},{},{}", row.n, row.support_size, row.profile.h)?;
        for e in &row.profile.per_alpha {
            write!(out, ",{}", e.renyi)?;
        }
        for e in &row.profile.per_alpha {
            write!(out, ",{}", e.qnorm)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
