//! Spectral radius estimates r_q(μ) from the decay of ‖ν_n‖_q, and the
//! profile −p·log r_{p/(p−1)} whose large-p limit is c(G,H;μ).

use super::NormError;
use crate::coset::SubgroupOracle;
use crate::walk::entropy::{entropy_profile, rate_fit, FitModel};
use crate::walk::{convolve_step, CosetDistribution, Measure, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRow {
    pub q: f64,
    /// Conjugate exponent p = q/(q−1).
    pub p: f64,
    pub r_q: f64,
    pub stderr: f64,
    pub minus_p_log_rq: f64,
    /// h_q = (q/(1−q))·log r_q, the Rényi rate the theorem attaches to r_q.
    pub h_q: f64,
    pub window: (u32, u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    /// Rows in increasing p (decreasing q).
    pub rows: Vec<SpectralRow>,
    /// −p log r_q at the largest available p; the desk-scale stand-in for
    /// the p → ∞ limit.
    pub c_estimate: f64,
    /// Whether −p log r_q is non-decreasing in p within the fitted
    /// standard errors.
    pub monotone_in_p: bool,
}

/// Runs the walk to n_max, fits log‖ν_n‖_q with a log-corrected slope for
/// each q, and tabulates the profile.
pub fn spectral_profile<V: Value>(
    oracle: &SubgroupOracle,
    mu: &Measure<V>,
    q_list: &[f64],
    n_max: u32,
) -> Result<SpectralProfile, NormError> {
    for &q in q_list {
        if !(q > 1.0 && q <= 2.0) {
            return Err(NormError::BadOrder(q));
        }
    }
    if q_list.is_empty() {
        return Err(NormError::InsufficientData { need: 1, got: 0 });
    }
    let mut series: Vec<Vec<(u32, f64)>> = vec![Vec::new(); q_list.len()];
    let mut nu = CosetDistribution::delta(oracle)?;
    for n in 1..=n_max {
        nu = convolve_step(mu, &nu, oracle)?;
        let profile = entropy_profile(&nu, q_list)?;
        for (s, entry) in series.iter_mut().zip(&profile.per_alpha) {
            s.push((n, entry.qnorm.ln()));
        }
    }

    let mut rows: Vec<SpectralRow> = Vec::new();
    for (&q, s) in q_list.iter().zip(&series) {
        let fit = rate_fit(s, FitModel::SlopeWithLogCorrection)?;
        let r_q = fit.rate.exp().min(1.0);
        let p = q / (q - 1.0);
        rows.push(SpectralRow {
            q,
            p,
            r_q,
            stderr: fit.stderr,
            minus_p_log_rq: -p * r_q.ln(),
            h_q: q / (1.0 - q) * r_q.ln(),
            window: fit.window,
        });
    }
    rows.sort_by(|a, b| a.p.partial_cmp(&b.p).expect("finite p"));

    let mut monotone_in_p = true;
    for pair in rows.windows(2) {
        let slack = pair[0].p * pair[0].stderr + pair[1].p * pair[1].stderr + 1e-9;
        if pair[1].minus_p_log_rq < pair[0].minus_p_log_rq - slack {
            monotone_in_p = false;
        }
    }
    let c_estimate = rows.last().expect("nonempty").minus_p_log_rq;
    Ok(SpectralProfile {
        rows,
        c_estimate,
        monotone_in_p,
    })
}

/// CSV rows `q,p,r_q,stderr,minus_p_log_rq`.
pub fn write_profile_csv<W: std::io::Write>(
    out: &mut W,
    profile: &SpectralProfile,
) -> std::io::Result<()> {
    writeln!(out, "q,p,r_q,stderr,minus_p_log_rq")?;
    for row in &profile.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.q, row.p, row.r_q, row.stderr, row.minus_p_log_rq
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupModel;

    #[test]
    fn z_walk_spectral_radius_is_near_one() {
        let model = GroupModel::free_abelian(1).unwrap();
        let oracle = SubgroupOracle::trivial(model.clone()).unwrap();
        let mu: Measure<f64> = Measure::uniform_on_generators(&model).unwrap();
        let profile = spectral_profile(&oracle, &mu, &[2.0], 60).unwrap();
        let row = &profile.rows[0];
        assert!(row.r_q > 0.97, "r_2 estimate {}", row.r_q);
        assert!(row.r_q <= 1.0);
    }

    #[test]
    fn f2_walk_recovers_the_tree_spectral_radius() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::trivial(model.clone()).unwrap();
        let mu: Measure<f64> = Measure::uniform_on_generators(&model).unwrap();
        let profile = spectral_profile(&oracle, &mu, &[2.0], 11).unwrap();
        let row = &profile.rows[0];
        let kesten = 3.0f64.sqrt() / 2.0;
        assert!(
            (row.r_q - kesten).abs() < 0.02 * kesten,
            "r_2 = {} vs {}",
            row.r_q,
            kesten
        );
    }

    #[test]
    fn profile_is_monotone_in_p_on_the_tree() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::trivial(model.clone()).unwrap();
        let mu: Measure<f64> = Measure::uniform_on_generators(&model).unwrap();
        let profile =
            spectral_profile(&oracle, &mu, &[2.0, 4.0 / 3.0, 8.0 / 7.0], 10).unwrap();
        assert!(profile.monotone_in_p);
        assert_eq!(profile.rows.len(), 3);
        assert!(profile.rows[0].p < profile.rows[1].p);
        assert!(profile.c_estimate >= profile.rows[0].minus_p_log_rq - 1e-6);
        for row in &profile.rows {
            assert!(row.r_q > 0.0 && row.r_q <= 1.0);
            assert!(row.h_q >= 0.0);
        }
    }

    #[test]
    fn bad_orders_are_rejected() {
        let model = GroupModel::free(2).unwrap();
        let oracle = SubgroupOracle::trivial(model.clone()).unwrap();
        let mu: Measure<f64> = Measure::uniform_on_generators(&model).unwrap();
        assert!(matches!(
            spectral_profile(&oracle, &mu, &[2.5], 8),
            Err(NormError::BadOrder(_))
        ));
        assert!(matches!(
            spectral_profile(&oracle, &mu, &[1.0], 8),
            Err(NormError::BadOrder(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let model = GroupModel::free_abelian(1).unwrap();
        let oracle = SubgroupOracle::trivial(model.clone()).unwrap();
        let mu: Measure<f64> = Measure::uniform_on_generators(&model).unwrap();
        let profile = spectral_profile(&oracle, &mu, &[2.0], 8).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &profile).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("q,p,r_q,stderr,minus_p_log_rq\n2,2,"));
    }
}
