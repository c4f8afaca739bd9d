//! Polynomial-versus-exponential classification of growth series.
//!
//! Small radii make the two regimes genuinely hard to separate, so the
//! classifier prefers `Inconclusive` over a wrong label: a model is
//! eligible only with R² ≥ 0.99 on the declared window, and when both
//! models qualify the winner must beat the loser's residual standard
//! deviation by at least a factor of two.

use super::{GrowthError, GrowthSeries};

pub const R2_THRESHOLD: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub enum GrowthLabel {
    Polynomial { degree: f64, r2: f64 },
    Exponential { rate: f64, r2: f64 },
    Inconclusive { poly_r2: f64, exp_r2: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthClass {
    pub label: GrowthLabel,
    pub window: (u32, u32),
}

impl GrowthClass {
    /// Subexponential in the sense of the verdict rules: a confident
    /// polynomial label.
    pub fn is_subexponential(&self) -> bool {
        matches!(self.label, GrowthLabel::Polynomial { .. })
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.label, GrowthLabel::Exponential { .. })
    }

    /// Bounded growth: polynomial of essentially zero degree.
    pub fn is_bounded(&self) -> bool {
        matches!(self.label, GrowthLabel::Polynomial { degree, .. } if degree <= 0.5)
    }
}

struct LineFit {
    slope: f64,
    r2: f64,
    residual_var: f64,
}

/// Ordinary least squares with the degenerate cases pinned: a perfectly
/// constant target is a perfect fit of slope 0.
fn line_fit(points: &[(f64, f64)]) -> LineFit {
    let k = points.len() as f64;
    let xm = points.iter().map(|p| p.0).sum::<f64>() / k;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sst: f64 = points.iter().map(|p| (p.1 - ym).powi(2)).sum();
    if sst == 0.0 {
        return LineFit {
            slope: 0.0,
            r2: 1.0,
            residual_var: 0.0,
        };
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let dof = (points.len().max(3) - 2) as f64;
    LineFit {
        slope,
        r2: 1.0 - ssr / sst,
        residual_var: ssr / dof,
    }
}

/// Classifies a growth series on a window of radii (defaults to the whole
/// series). The polynomial fit regresses log c on log r (radius 0 is
/// skipped), the exponential fit log c on r.
pub fn growth_fit(
    series: &GrowthSeries,
    window: Option<(u32, u32)>,
) -> Result<GrowthClass, GrowthError> {
    let max_r = series.max_radius() as u32;
    let (lo, hi) = window.unwrap_or((0, max_r));
    if lo > hi || hi > max_r {
        return Err(GrowthError::BadWindow {
            lo: lo as usize,
            hi: hi as usize,
            len: series.counts().len(),
        });
    }
    let poly_points: Vec<(f64, f64)> = (lo.max(1)..=hi)
        .map(|r| {
            let c = series.ball(r as usize).expect("radius in window") as f64;
            ((r as f64).ln(), c.ln())
        })
        .collect();
    let exp_points: Vec<(f64, f64)> = (lo..=hi)
        .map(|r| {
            let c = series.ball(r as usize).expect("radius in window") as f64;
            (r as f64, c.ln())
        })
        .collect();
    if poly_points.len() < 5 {
        return Err(GrowthError::InsufficientData {
            need: 5,
            got: poly_points.len(),
        });
    }

    let poly = line_fit(&poly_points);
    let exp = line_fit(&exp_points);
    let window = (lo, hi);

    let poly_ok = poly.r2 >= R2_THRESHOLD;
    let exp_ok = exp.r2 >= R2_THRESHOLD;
    let label = match (poly_ok, exp_ok) {
        (false, false) => GrowthLabel::Inconclusive {
            poly_r2: poly.r2,
            exp_r2: exp.r2,
        },
        (true, false) => GrowthLabel::Polynomial {
            degree: poly.slope,
            r2: poly.r2,
        },
        (false, true) => GrowthLabel::Exponential {
            rate: exp.slope,
            r2: exp.r2,
        },
        (true, true) => {
            // both eligible: require a 2x residual-stddev separation
            if poly.residual_var * 4.0 <= exp.residual_var {
                GrowthLabel::Polynomial {
                    degree: poly.slope,
                    r2: poly.r2,
                }
            } else if exp.residual_var * 4.0 <= poly.residual_var {
                GrowthLabel::Exponential {
                    rate: exp.slope,
                    r2: exp.r2,
                }
            } else {
                GrowthLabel::Inconclusive {
                    poly_r2: poly.r2,
                    exp_r2: exp.r2,
                }
            }
        }
    };
    Ok(GrowthClass { label, window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::GrowthSource;

    fn series(counts: Vec<u64>) -> GrowthSeries {
        GrowthSeries::new(counts, GrowthSource::GroupBall).unwrap()
    }

    #[test]
    fn z2_balls_are_polynomial() {
        let s = series(vec![1, 5, 13, 25, 41, 61]);
        let class = growth_fit(&s, None).unwrap();
        match class.label {
            GrowthLabel::Polynomial { degree, r2 } => {
                assert!(r2 >= R2_THRESHOLD);
                assert!((1.3..2.3).contains(&degree), "degree {degree}");
            }
            other => panic!("expected polynomial, got {other:?}"),
        }
    }

    #[test]
    fn geometric_series_is_exponential_with_exact_rate() {
        let counts: Vec<u64> = (0..10).map(|n| 3u64.pow(n)).collect();
        let class = growth_fit(&series(counts), None).unwrap();
        match class.label {
            GrowthLabel::Exponential { rate, r2 } => {
                assert!((rate - 3.0f64.ln()).abs() < 1e-9);
                assert!((r2 - 1.0).abs() < 1e-12);
            }
            other => panic!("expected exponential, got {other:?}"),
        }
    }

    #[test]
    fn exact_power_laws_recover_the_degree() {
        for d in 1..=5u32 {
            let counts: Vec<u64> = (0..=30).map(|n: u64| n.pow(d).max(1)).collect();
            let class = growth_fit(&series(counts), Some((10, 30))).unwrap();
            match class.label {
                GrowthLabel::Polynomial { degree, .. } => {
                    assert!(
                        (degree - d as f64).abs() < 0.1,
                        "d={d} recovered {degree}"
                    );
                }
                other => panic!("d={d}: got {other:?}"),
            }
        }
    }

    #[test]
    fn constant_series_is_bounded() {
        let class = growth_fit(&series(vec![1; 9]), None).unwrap();
        assert!(class.is_subexponential());
        assert!(class.is_bounded());
        match class.label {
            GrowthLabel::Polynomial { degree, r2 } => {
                assert_eq!(degree, 0.0);
                assert_eq!(r2, 1.0);
            }
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn short_windows_are_rejected() {
        let s = series(vec![1, 3, 9, 27, 81]);
        assert!(matches!(
            growth_fit(&s, Some((1, 3))),
            Err(GrowthError::InsufficientData { need: 5, got: 3 })
        ));
        assert!(matches!(
            growth_fit(&s, Some((2, 9))),
            Err(GrowthError::BadWindow { .. })
        ));
    }

    #[test]
    fn noisy_short_series_is_inconclusive() {
        // interpolates between regimes: neither model reaches 0.99
        let s = series(vec![1, 2, 3, 9, 10, 33, 34]);
        let class = growth_fit(&s, None).unwrap();
        assert!(matches!(class.label, GrowthLabel::Inconclusive { .. }));
    }
}
