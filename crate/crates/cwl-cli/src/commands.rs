//! The seven commands. Each one assembles its objects from the config,
//! runs the corresponding core pipeline, writes CSV/JSON artifacts into the
//! output directory, and prints a one-line summary.

use std::fs;
use std::path::PathBuf;

use num_rational::BigRational;
use serde_json::{json, Value as Json};

use cwl_core::coset::schreier::schreier_ball_with_budget;
use cwl_core::group::{BallCache, Elem};
use cwl_core::growth::{
    conj_intersection_growth, growth_fit, slc_verdict, subgroup_growth, GrowthClass,
    GrowthLabel, GrowthSeries, GrowthSource, SlcInputs,
};
use cwl_core::lattice::{verify_named_example, CheckStatus};
use cwl_core::norms::spectral::{spectral_profile, write_profile_csv};
use cwl_core::norms::witness::{ball_witness_crossover, rd_witness_test, TestFunction};
use cwl_core::stallings::{classify_pair_free, FreePairVerdict, Index};
use cwl_core::walk::entropy::{
    entropy_profile, rate_fit, write_walk_csv, FitModel, RateFit, WalkRow,
};
use cwl_core::walk::{convolve_step_with_budget, CosetDistribution, Measure, Value};

use crate::assemble::{
    build_family, build_measure, build_model, build_oracle, build_witness, parse_element,
};
use crate::config::{ExperimentConfig, GroupSpec, ValueMode};
use crate::error::CliError;
use crate::report::{display_path, ReportCtx};

pub struct RunCtx {
    pub config: ExperimentConfig,
    pub report: ReportCtx,
    pub cache_dir: PathBuf,
}

impl RunCtx {
    fn budget(&self) -> usize {
        self.config.budget_elems
    }

    fn seed(&self) -> u64 {
        self.config.seed
    }
}

pub fn run_walk(ctx: &RunCtx) -> Result<(), CliError> {
    match ctx.config.mode {
        ValueMode::Exact => walk_impl::<BigRational>(ctx),
        ValueMode::Float => walk_impl::<f64>(ctx),
    }
}

fn walk_impl<V: Value>(ctx: &RunCtx) -> Result<(), CliError> {
    let model = build_model(&ctx.config.group)?;
    let oracle = build_oracle(model.clone(), &ctx.config.subgroup)?;
    let mu: Measure<V> = build_measure(&model, &ctx.config.measure)?;
    let params = &ctx.config.walk;

    let mut nu = CosetDistribution::delta(&oracle)?;
    let mut rows: Vec<WalkRow> = Vec::new();
    let mut h_series: Vec<(u32, f64)> = Vec::new();
    let mut renyi_series: Vec<Vec<(u32, f64)>> = vec![Vec::new(); params.alphas.len()];
    for n in 1..=params.n_max {
        nu = convolve_step_with_budget(&mu, &nu, &oracle, ctx.budget())?;
        let profile = entropy_profile(&nu, &params.alphas)?;
        h_series.push((n, profile.h));
        for (series, entry) in renyi_series.iter_mut().zip(&profile.per_alpha) {
            series.push((n, entry.renyi));
        }
        rows.push(WalkRow {
            n,
            support_size: nu.support_size(),
            profile,
        });
    }

    let mut csv = Vec::new();
    write_walk_csv(&mut csv, &rows)?;
    ctx.report.write_bytes("walk.csv", &csv)?;

    let h_fit = rate_fit(&h_series, FitModel::LinearSlope).ok();
    let h_fit_log = rate_fit(&h_series, FitModel::SlopeWithLogCorrection).ok();
    let renyi_fits: Vec<Json> = params
        .alphas
        .iter()
        .zip(&renyi_series)
        .map(|(&alpha, series)| {
            json!({
                "alpha": alpha,
                "fit": rate_fit(series, FitModel::LinearSlope).ok().as_ref().map(fit_json),
            })
        })
        .collect();

    let h_nondecreasing = h_series.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);
    let h_over_n: Vec<f64> = h_series.iter().map(|&(n, h)| h / n as f64).collect();
    let h_over_n_nonincreasing = h_over_n.windows(2).all(|w| w[1] <= w[0] + 1e-12);

    let body = json!({
        "meta": ctx.report.meta("walk", &[]),
        "n_max": params.n_max,
        "alphas": params.alphas,
        "entropy_fit": h_fit.as_ref().map(fit_json),
        "entropy_fit_log_corrected": h_fit_log.as_ref().map(fit_json),
        "renyi_fits": renyi_fits,
        "h_nondecreasing": h_nondecreasing,
        "h_over_n_final": h_over_n.last(),
        "h_over_n_nonincreasing": h_over_n_nonincreasing,
        "final_support": rows.last().map(|r| r.support_size),
    });
    ctx.report.write_json("walk.json", &body)?;

    match &h_fit {
        Some(fit) => println!(
            "walk: {} steps, H slope {:.6} ± {:.6} on n in [{}, {}]",
            params.n_max, fit.rate, fit.stderr, fit.window.0, fit.window.1
        ),
        None => println!("walk: {} steps (too few for a rate fit)", params.n_max),
    }
    Ok(())
}

fn fit_json(fit: &RateFit) -> Json {
    json!({
        "model": match fit.model {
            FitModel::LinearSlope => "linear",
            FitModel::SlopeWithLogCorrection => "linear-with-log-correction",
        },
        "rate": fit.rate,
        "stderr": fit.stderr,
        "window": [fit.window.0, fit.window.1],
        "cesaro": fit.cesaro,
    })
}

pub fn run_spectral(ctx: &RunCtx) -> Result<(), CliError> {
    match ctx.config.mode {
        ValueMode::Exact => spectral_impl::<BigRational>(ctx),
        ValueMode::Float => spectral_impl::<f64>(ctx),
    }
}

fn spectral_impl<V: Value>(ctx: &RunCtx) -> Result<(), CliError> {
    let model = build_model(&ctx.config.group)?;
    let oracle = build_oracle(model.clone(), &ctx.config.subgroup)?;
    let mu: Measure<V> = build_measure(&model, &ctx.config.measure)?;
    let params = &ctx.config.spectral;
    let profile = spectral_profile(&oracle, &mu, &params.q_list, params.n_max)?;

    let mut csv = Vec::new();
    write_profile_csv(&mut csv, &profile)?;
    ctx.report.write_bytes("spectral.csv", &csv)?;

    let rows: Vec<Json> = profile
        .rows
        .iter()
        .map(|r| {
            json!({
                "q": r.q,
                "p": r.p,
                "r_q": r.r_q,
                "stderr": r.stderr,
                "minus_p_log_rq": r.minus_p_log_rq,
                "h_q": r.h_q,
                "window": [r.window.0, r.window.1],
            })
        })
        .collect();
    let body = json!({
        "meta": ctx.report.meta("spectral", &["minus-p-log-rq-nondecreasing-in-p"]),
        "n_max": params.n_max,
        "rows": rows,
        "c_estimate": profile.c_estimate,
        "monotone_in_p": profile.monotone_in_p,
    });
    ctx.report.write_json("spectral.json", &body)?;

    println!(
        "spectral: c estimate {:.6} from {} exponent(s), monotone in p: {}",
        profile.c_estimate,
        profile.rows.len(),
        profile.monotone_in_p
    );
    if profile.monotone_in_p {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(1))
    }
}

pub fn run_growth(ctx: &RunCtx) -> Result<(), CliError> {
    let model = build_model(&ctx.config.group)?;
    let oracle = build_oracle(model.clone(), &ctx.config.subgroup)?;
    let params = &ctx.config.growth;
    let mut cache = BallCache::at_dir(&ctx.cache_dir).with_budget(ctx.budget());

    let ball = cache.ball(&model, params.radius)?;
    let group_series =
        GrowthSeries::new(ball.ball_sizes(params.radius), GrowthSource::GroupBall)?;
    let schreier =
        schreier_ball_with_budget(&oracle, params.radius, false, ctx.budget())?.series;
    let subgroup = subgroup_growth(&oracle, params.radius, &mut cache)?;
    let mut intersections: Vec<(String, GrowthSeries)> = Vec::new();
    for s in &params.conjugators {
        let x = parse_element(&model, s)?;
        let series = conj_intersection_growth(&oracle, &x, params.radius, &mut cache)?;
        intersections.push((s.clone(), series));
    }

    let mut csv = String::from("series,radius,ball,sphere\n");
    let mut emit = |name: &str, series: &GrowthSeries| {
        let counts = series.counts();
        for (r, &b) in counts.iter().enumerate() {
            let sphere = if r == 0 { b } else { b - counts[r - 1] };
            csv.push_str(&format!("{name},{r},{b},{sphere}\n"));
        }
    };
    emit("group", &group_series);
    emit("schreier", &schreier);
    emit("subgroup", &subgroup);
    for (i, (_, series)) in intersections.iter().enumerate() {
        emit(&format!("intersection-{i}"), series);
    }
    ctx.report.write_bytes("growth.csv", csv.as_bytes())?;

    let window = params.window;
    let group_class = growth_fit(&group_series, window)?;
    let schreier_class = growth_fit(&schreier, window)?;
    let subgroup_class = growth_fit(&subgroup, window)?;
    let inter_classes: Vec<(String, GrowthClass)> = intersections
        .iter()
        .map(|(s, series)| Ok((s.clone(), growth_fit(series, window)?)))
        .collect::<Result<_, CliError>>()?;

    let inputs = SlcInputs {
        schreier: Some(schreier_class.clone()),
        subgroup: Some(subgroup_class.clone()),
        intersections: inter_classes.clone(),
        co_amenable: params
            .co_amenable
            .as_ref()
            .map(|c| (c.flag, c.source.clone())),
    };
    let verdict = slc_verdict(&inputs)?;

    let inter_json: Vec<Json> = intersections
        .iter()
        .zip(&inter_classes)
        .map(|((conj, series), (_, class))| {
            json!({
                "conjugator": conj,
                "class": class_json(class, series),
            })
        })
        .collect();
    let body = json!({
        "meta": ctx.report.meta("growth", &[verdict.rule]),
        "radius": params.radius,
        "fit_window": window.map(|(lo, hi)| json!([lo, hi])),
        "series": {
            "group": class_json(&group_class, &group_series),
            "schreier": class_json(&schreier_class, &schreier),
            "subgroup": class_json(&subgroup_class, &subgroup),
            "intersections": inter_json,
        },
        "verdict": verdict.to_json(),
    });
    ctx.report.write_json("growth.json", &body)?;

    println!(
        "growth: radius {}, verdict {:?} by rule {}",
        params.radius, verdict.verdict, verdict.rule
    );
    Ok(())
}

fn class_json(class: &GrowthClass, series: &GrowthSeries) -> Json {
    json!({
        "counts": series.counts(),
        "label": label_json(&class.label),
        "window": [class.window.0, class.window.1],
    })
}

fn label_json(label: &GrowthLabel) -> Json {
    match label {
        GrowthLabel::Polynomial { degree, r2 } => {
            json!({"type": "polynomial", "degree": degree, "r2": r2})
        }
        GrowthLabel::Exponential { rate, r2 } => {
            json!({"type": "exponential", "rate": rate, "r2": r2})
        }
        GrowthLabel::Inconclusive { poly_r2, exp_r2 } => {
            json!({"type": "inconclusive", "poly_r2": poly_r2, "exp_r2": exp_r2})
        }
    }
}

pub fn run_classify_free(ctx: &RunCtx) -> Result<(), CliError> {
    let rank = match ctx.config.group {
        GroupSpec::Free { rank } => rank,
        _ => {
            return Err(CliError::Config(
                "classify-free requires a free group model".into(),
            ))
        }
    };
    let model = build_model(&ctx.config.group)?;
    let words: Vec<Vec<i8>> = ctx
        .config
        .classify
        .words
        .iter()
        .map(|w| match model.parse_word(w)? {
            Elem::Word(letters) => Ok(letters),
            other => Err(CliError::Run(format!(
                "parsed `{w}` into a non-word element {other:?}"
            ))),
        })
        .collect::<Result<_, CliError>>()?;
    let (verdict, graph) = classify_pair_free(rank, &words)?;
    let (h_rank, index) = graph.rank_index();

    let index_json = match index {
        Index::Finite(m) => json!(m),
        Index::Infinite => json!("infinite"),
    };
    let body = json!({
        "meta": ctx.report.meta("classify-free", &["finite-index-or-cyclic-iff-slc"]),
        "words": ctx.config.classify.words,
        "verdict": verdict_name(verdict),
        "subgroup_rank": h_rank,
        "index": index_json,
        "graph": {"vertices": graph.vertex_count(), "edges": graph.edge_count()},
    });
    ctx.report.write_json("classify.json", &body)?;

    let index_text = match index {
        Index::Finite(m) => m.to_string(),
        Index::Infinite => "infinite".into(),
    };
    println!(
        "classify-free: {} (subgroup rank {h_rank}, index {index_text})",
        verdict_name(verdict)
    );
    Ok(())
}

fn verdict_name(v: FreePairVerdict) -> &'static str {
    match v {
        FreePairVerdict::SlcYesFiniteIndex => "SLC_yes_finite_index",
        FreePairVerdict::SlcYesTrivialOrZ => "SLC_yes_trivial_or_Z",
        FreePairVerdict::SlcNoRankGe2InfiniteIndex => "SLC_no_rank_ge2_infinite_index",
    }
}

pub fn run_norms(ctx: &RunCtx) -> Result<(), CliError> {
    match ctx.config.mode {
        ValueMode::Exact => norms_impl::<BigRational>(ctx),
        ValueMode::Float => norms_impl::<f64>(ctx),
    }
}

fn norms_impl<V: Value>(ctx: &RunCtx) -> Result<(), CliError> {
    let params = &ctx.config.norms;
    if params.witness.is_none() && params.crossover.is_none() {
        return Err(CliError::Config(
            "norms needs norms.witness (with norms.family) or norms.crossover".into(),
        ));
    }

    let mut rules: Vec<&str> = Vec::new();
    let mut witness_json = Json::Null;
    if let Some(wspec) = &params.witness {
        let family_spec = params.family.as_ref().ok_or_else(|| {
            CliError::Config("norms.witness requires norms.family".into())
        })?;
        let model = build_model(&ctx.config.group)?;
        let oracle = build_oracle(model.clone(), &ctx.config.subgroup)?;
        let witness = build_witness(&model, wspec)?;
        let family: Vec<TestFunction<V>> = build_family(&model, family_spec, ctx.seed())?;
        let report = rd_witness_test(
            &oracle,
            &witness,
            &family,
            &params.q_list,
            params.vec_radius,
            params.trials,
            ctx.seed(),
        )?;
        rules.push("single-violation-refutes");
        rules.push("consistency-is-not-proof");
        println!(
            "norms: witness {} over {} test function(s)",
            if report.refuted { "refuted" } else { "consistent" },
            family.len()
        );
        witness_json = json!({
            "spec": serde_json::to_value(wspec).expect("witness spec serializes"),
            "report": report.to_json(),
        });
    }

    let crossover_json = match &params.crossover {
        Some(c) => {
            rules.push("integer-crossover-certificate");
            let radius = ball_witness_crossover(c.c_num, c.c_den, c.d, c.r_cap);
            match radius {
                Some(r) => println!("norms: crossover radius {r}"),
                None => println!("norms: no crossover through R = {}", c.r_cap),
            }
            json!({
                "c_num": c.c_num,
                "c_den": c.c_den,
                "d": c.d,
                "r_cap": c.r_cap,
                "radius": radius,
            })
        }
        None => Json::Null,
    };

    let body = json!({
        "meta": ctx.report.meta("norms", &rules),
        "witness": witness_json,
        "crossover": crossover_json,
    });
    ctx.report.write_json("norms.json", &body)?;
    Ok(())
}

pub fn run_verify(ctx: &RunCtx, example_id: Option<&str>) -> Result<(), CliError> {
    let ids: Vec<String> = match example_id {
        Some(id) => vec![id.to_string()],
        None => ctx.config.verify.examples.clone(),
    };
    if ids.is_empty() {
        return Err(CliError::Config(
            "give an example id or set verify.examples in the config".into(),
        ));
    }

    let mut failed = 0usize;
    for id in &ids {
        let report = verify_named_example(id)?;
        let checks: Vec<Json> = report
            .checks
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "status": if c.status == CheckStatus::Pass { "pass" } else { "fail" },
                    "details": c.details,
                })
            })
            .collect();
        let body = json!({
            "meta": ctx.report.meta("verify", &["all-checks-must-pass"]),
            "example_id": id,
            "passed": report.passed(),
            "checks": checks,
        });
        ctx.report.write_json(&format!("verify-{id}.json"), &body)?;

        if report.passed() {
            println!("PASS {id} ({} checks)", report.checks.len());
        } else {
            failed += 1;
            for c in report.checks.iter().filter(|c| c.status == CheckStatus::Fail) {
                println!("FAIL {id} :: {}: {}", c.name, c.details);
            }
        }
        eprintln!("verify {id}: {} ms", report.elapsed_ms);
    }
    if failed > 0 {
        Err(CliError::ChecksFailed(failed))
    } else {
        Ok(())
    }
}

pub fn run_report(ctx: &RunCtx) -> Result<(), CliError> {
    let dir = &ctx.report.out_dir;
    let mut names: Vec<String> = Vec::new();
    if dir.is_dir() {
        for entry in fs::read_dir(dir)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if name.ends_with(".csv") {
                names.push(name);
            }
        }
    }
    names.sort();

    let mut files = serde_json::Map::new();
    for name in &names {
        let text = fs::read_to_string(dir.join(name))?;
        let mut lines = text.lines();
        let columns: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
        let rows: Vec<&str> = lines.collect();
        files.insert(
            name.clone(),
            json!({
                "columns": columns,
                "row_count": rows.len(),
                "first_row": rows.first(),
                "last_row": rows.last(),
            }),
        );
    }
    let body = json!({
        "meta": ctx.report.meta("report", &[]),
        "csv_files": Json::Object(files),
    });
    let path = ctx.report.write_json("report.json", &body)?;
    println!(
        "report: merged {} CSV file(s) into {}",
        names.len(),
        display_path(&path)
    );
    Ok(())
}
