//! One function per subcommand. Each loads its inputs, calls into the core
//! crate and writes its files through [`Outputs`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use covertkey_core::covert::{
    self, expansion_report, ratio_spread, ConstantAlpha, CovertConfig, DefaultSchedule, Rho, Subset,
};
use covertkey_core::prob::kl_divergence;
use covertkey_core::regions::{
    bernoulli_grid, csk_inner_corner, csk_outer_corner, csk_region, default_rho_grid, wsk_region_sweep, RatePair,
};
use covertkey_core::sim::{
    aux_metrics, decay_study, exact_metrics, exact_protocol_metrics, protocol_metrics, rate_plan, reliability_rhs,
    resolvability_rhs, sample_codebooks, BoundTerms, DecaySettings, RatePlan, SimReport, UserSizes,
};
use covertkey_core::{validate, BinaryMacPair, Error as CoreError};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    BoundsArgs, CodeArgs, Command, ExamplesArgs, ModeArg, RegionCskArgs, RegionWskArgs, SchemeArg, SimulateArgs,
    VerifyArgs,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{digest_file, FileDigest};

/// Output directory plus the names written so far.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> covertkey_core::Result<()>) -> CliResult<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn digests(&self) -> CliResult<Vec<FileDigest>> {
        let mut names = self.files.clone();
        names.sort();
        names.dedup();
        names
            .iter()
            .map(|n| digest_file(&self.dir.join(n), n.clone()))
            .collect()
    }
}

/// Read, parse and validate a channel file.
pub fn load_channel(path: &Path) -> CliResult<(BinaryMacPair, FileDigest)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read channel file {}: {e}", path.display())))?;
    let mac = BinaryMacPair::from_json(&text).map_err(|e| CliError::Validation(e.to_string()))?;
    let report = validate(&mac);
    if !report.is_valid() {
        return Err(CliError::Validation(format!(
            "channel {} failed validation\n{report}",
            path.display()
        )));
    }
    let digest = FileDigest {
        path: path.display().to_string(),
        sha256: crate::manifest::sha256_hex(text.as_bytes()),
    };
    Ok((mac, digest))
}

/// Run `cmd`, returning the channel digest if the command read one.
pub fn run(cmd: &Command, out: &mut Outputs) -> CliResult<Option<FileDigest>> {
    match cmd {
        Command::RegionCsk(a) => region_csk(a, out).map(Some),
        Command::RegionWsk(a) => region_wsk(a, out).map(Some),
        Command::VerifyExpansions(a) => verify_expansions(a, out).map(Some),
        Command::Simulate(a) => simulate(a, out).map(Some),
        Command::Bounds(a) => bounds(a, out).map(Some),
        Command::Examples(a) => examples(a, out).map(|_| None),
        Command::Replay(_) => Err(CliError::Usage("a manifest cannot replay another replay".into())),
    }
}

fn region_csk(a: &RegionCskArgs, out: &mut Outputs) -> CliResult<FileDigest> {
    let (mac, digest) = load_channel(&a.channel.channel)?;
    if a.grid == 0 {
        return Err(CliError::Usage("--grid must be at least 1".into()));
    }
    let grid = Rho::grid(a.rho_min, a.rho_max, a.grid)?;
    let inner = csk_region(&mac, &grid, false)?;
    let outer = csk_region(&mac, &grid, true)?;
    out.write_with("csk_inner.csv", |w| inner.write_csv(w))?;
    out.write_with("csk_outer.csv", |w| outer.write_csv(w))?;
    out.write_with("csk_inner_samples.csv", |w| inner.write_samples_csv(a.samples, w))?;
    out.write_with("csk_outer_samples.csv", |w| outer.write_samples_csv(a.samples, w))?;
    println!("csk inner: max r1 {:.6}, max r2 {:.6}", inner.max_r1(), inner.max_r2());
    println!("csk outer: max r1 {:.6}, max r2 {:.6}", outer.max_r1(), outer.max_r2());
    Ok(digest)
}

fn region_wsk(a: &RegionWskArgs, out: &mut Outputs) -> CliResult<FileDigest> {
    let (mac, digest) = load_channel(&a.channel.channel)?;
    if a.grid == 0 {
        return Err(CliError::Usage("--grid must be at least 1".into()));
    }
    let (inner, outer) = wsk_region_sweep(&mac, &bernoulli_grid(a.grid))?;
    out.write_with("wsk_inner.csv", |w| inner.write_csv(w))?;
    out.write_with("wsk_outer.csv", |w| outer.write_csv(w))?;
    out.write_with("wsk_inner_samples.csv", |w| inner.write_samples_csv(a.samples, w))?;
    out.write_with("wsk_outer_samples.csv", |w| outer.write_samples_csv(a.samples, w))?;
    println!("wsk inner: max r1 {:.6}, max r2 {:.6}", inner.max_r1(), inner.max_r2());
    println!("wsk outer: max r1 {:.6}, max r2 {:.6}", outer.max_r1(), outer.max_r2());
    Ok(digest)
}

#[derive(Serialize)]
struct SpreadCheck {
    name: String,
    values: Vec<f64>,
    spread: f64,
    passed: bool,
}

fn verify_expansions(a: &VerifyArgs, out: &mut Outputs) -> CliResult<FileDigest> {
    let (mac, digest) = load_channel(&a.channel.channel)?;
    if a.alpha.is_empty() || a.alpha.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(CliError::Usage("--alpha needs values in (0, 1]".into()));
    }
    let rho = Rho::from_rho1(a.rho)?;
    let reports = a
        .alpha
        .iter()
        .map(|&alpha| expansion_report(&mac, &CovertConfig::new(rho, alpha)?))
        .collect::<covertkey_core::Result<Vec<_>>>()?;

    let mut series: Vec<(String, Vec<f64>)> = vec![(
        "divergence".into(),
        reports.iter().filter_map(|r| r.divergence.scaled).collect(),
    )];
    for (i, t) in Subset::ALL.iter().enumerate() {
        let label = t.label();
        let pick = |f: &dyn Fn(&covert::SubsetExpansion) -> Option<f64>| -> Vec<f64> {
            reports.iter().filter_map(|r| f(&r.subsets[i])).collect()
        };
        series.push((format!("info_y {label}"), pick(&|e| e.info_y.scaled)));
        series.push((format!("info_z {label}"), pick(&|e| e.info_z.scaled)));
        series.push((format!("info_yz {label}"), pick(&|e| e.info_yz.scaled)));
        series.push((format!("var_y/alpha {label}"), pick(&|e| e.var_y_over_alpha)));
        series.push((format!("var_z/alpha {label}"), pick(&|e| e.var_z_over_alpha)));
    }
    let checks: Vec<SpreadCheck> = series
        .into_iter()
        .map(|(name, values)| {
            let spread = ratio_spread(&values);
            SpreadCheck {
                name,
                passed: spread < a.max_spread,
                spread,
                values,
            }
        })
        .collect();
    for c in &checks {
        println!(
            "{:<22} spread {:>10.4}  {}",
            c.name,
            c.spread,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} bounded-ratio checks passed",
        checks.len() - failed,
        checks.len()
    );
    out.write_json(
        "expansions.json",
        &json!({ "config": Command::VerifyExpansions(a.clone()), "reports": reports, "checks": checks }),
    )?;
    Ok(digest)
}

fn config_for(code: &CodeArgs) -> CliResult<CovertConfig> {
    let alpha = match code.alpha {
        Some(a) => a,
        None => covert::alpha_schedule(code.n)?,
    };
    Ok(CovertConfig::new(Rho::from_rho1(code.rho)?, alpha)?)
}

/// Fixed sizes when given, otherwise the rounded plan.
fn plan_for(mac: &BinaryMacPair, cfg: &CovertConfig, code: &CodeArgs) -> CliResult<RatePlan> {
    let mu = (code.mu1, code.mu2, code.mu3);
    if let Some(s1) = code.sizes {
        let s2 = code.sizes2.unwrap_or(s1);
        let sizes: [UserSizes; 2] = [s1.into(), s2.into()];
        return Ok(RatePlan::with_sizes(mac, cfg, code.n, mu, sizes)?);
    }
    match rate_plan(mac, cfg, code.n, mu.0, mu.1, mu.2) {
        Ok(p) => Ok(p),
        Err(CoreError::InfeasiblePlan(p)) if code.allow_infeasible => {
            eprintln!("warning: {}", p.failure_summary());
            Ok(*p)
        }
        Err(e) => Err(e.into()),
    }
}

fn simulate(a: &SimulateArgs, out: &mut Outputs) -> CliResult<FileDigest> {
    let (mac, digest) = load_channel(&a.code.channel.channel)?;
    let seed = a.seed.ok_or_else(|| CliError::Usage("seed was not resolved".into()))?;
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let config = Command::Simulate(a.clone());

    if let Some(n_list) = &a.n_list {
        let settings = DecaySettings {
            rho: Rho::from_rho1(a.code.rho)?,
            mu: (a.code.mu1, a.code.mu2, a.code.mu3),
            trials: a.trials,
            seed,
            decoder: a.decoder.into(),
        };
        let study = match a.code.alpha {
            Some(alpha) => decay_study(&mac, &ConstantAlpha(alpha), n_list, settings)?,
            None => decay_study(&mac, &DefaultSchedule, n_list, settings)?,
        };
        for r in &study.rows {
            println!(
                "n {:>3}  alpha {:.4}  p_err {:.4}  source_tv {:.4}  covertness {:.5}{}",
                r.n,
                r.alpha,
                r.p_err,
                r.source_tv,
                r.covertness_kl,
                if r.plan_feasible { "" } else { "  (plan infeasible)" }
            );
        }
        for f in &study.fits {
            match &f.fit {
                Some(l) => println!("slope of log2 {} on n alpha_n: {:.4}", f.metric, l.slope),
                None => println!("slope of log2 {}: not enough positive values", f.metric),
            }
        }
        out.write_with("decay.csv", |w| study.write_csv(w))?;
        out.write_json("decay.json", &json!({ "config": config, "seed": seed, "study": study }))?;
        return Ok(digest);
    }

    let cfg = config_for(&a.code)?;
    let plan = plan_for(&mac, &cfg, &a.code)?;
    let cb = sample_codebooks(a.code.n, plan.sizes, &cfg, seed)?;
    let decoder = a.decoder.into();
    let exact = matches!(a.mode, ModeArg::Exact | ModeArg::Both);
    let mc = matches!(a.mode, ModeArg::MonteCarlo | ModeArg::Both);
    let aux = matches!(a.scheme, SchemeArg::Auxiliary | SchemeArg::Both);
    let prot = matches!(a.scheme, SchemeArg::Protocol | SchemeArg::Both);
    let mut reports: Vec<SimReport> = Vec::new();
    if aux && exact {
        reports.push(exact_metrics(&cb, &mac, &cfg, decoder)?);
    }
    if aux && mc {
        reports.push(aux_metrics(&cb, &mac, &cfg, a.trials, seed, decoder)?);
    }
    if prot && exact {
        reports.push(exact_protocol_metrics(&cb, &mac, &cfg, decoder)?);
    }
    if prot && mc {
        reports.push(protocol_metrics(&cb, &mac, &cfg, a.trials, seed, decoder)?);
    }
    for r in &reports {
        let secrecy = r.secrecy_tv.map_or("n/a".to_string(), |v| format!("{v:.5}"));
        println!(
            "{:<9} {:<11} p_err {:.5} +/- {:.5}  secrecy_tv {} ({})  source_tv {:.5}/{:.5}  covertness {:.6}",
            r.scheme.as_str(),
            r.mode.as_str(),
            r.p_err.value,
            r.p_err.half_width,
            secrecy,
            r.secrecy_kind.as_str(),
            r.source_tv_1,
            r.source_tv_2,
            r.covertness_kl
        );
    }
    out.write_with("reports.csv", |w| SimReport::write_csv(&reports, w))?;
    out.write_json(
        "reports.json",
        &json!({
            "config": config,
            "seed": seed,
            "plan": plan,
            "plan_feasible": plan.is_feasible(),
            "reports": reports,
        }),
    )?;
    Ok(digest)
}

fn bounds(a: &BoundsArgs, out: &mut Outputs) -> CliResult<FileDigest> {
    let (mac, digest) = load_channel(&a.code.channel.channel)?;
    let cfg = config_for(&a.code)?;
    let plan = plan_for(&mac, &cfg, &a.code)?;
    let reliability = reliability_rhs(&plan, &mac)?;
    let resolvability = resolvability_rhs(&plan, &mac)?;
    println!("reliability RHS   {:.6}", reliability.value);
    println!("resolvability RHS {:.6}", resolvability.value);
    out.write_with("bounds.csv", |w| {
        write_bounds_csv(&[("reliability", &reliability), ("resolvability", &resolvability)], w)
    })?;
    out.write_json(
        "bounds.json",
        &json!({
            "config": Command::Bounds(a.clone()),
            "plan": plan,
            "plan_feasible": plan.is_feasible(),
            "reliability": reliability,
            "resolvability": resolvability,
        }),
    )?;
    Ok(digest)
}

fn write_bounds_csv<W: Write>(bounds: &[(&str, &BoundTerms)], out: W) -> covertkey_core::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "bound",
        "subset",
        "mu",
        "threshold",
        "exponential",
        "probability",
        "prefactor",
        "value",
    ])?;
    for (name, b) in bounds {
        for (k, t) in Subset::ALL.iter().enumerate() {
            w.write_record([
                name.to_string(),
                t.label().to_string(),
                b.mu.to_string(),
                b.thresholds[k].to_string(),
                b.exponential[k].to_string(),
                b.probability[k].to_string(),
                b.prefactor.to_string(),
                b.value.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ChannelExample {
    name: &'static str,
    /// `D(P_i||P_0) - D(Q_i||Q_0)` for both users.
    kl_gaps: [f64; 2],
    rho: Rho,
    chi: f64,
    kappa: f64,
    inner_corner: RatePair,
    outer_corner: RatePair,
    /// Largest and smallest `chi` over the default weight grid.
    chi_range: [f64; 2],
}

fn examples(_a: &ExamplesArgs, out: &mut Outputs) -> CliResult<()> {
    let rho = Rho::new(0.28, 0.72)?;
    let grid = default_rho_grid();
    let mut summary = Vec::new();
    for (name, mac) in [
        ("table1_channel1", BinaryMacPair::table1_channel1()),
        ("table1_channel2", BinaryMacPair::table1_channel2()),
    ] {
        out.write(&format!("{name}.json"), mac.to_json().as_bytes())?;
        let gap = |role| -> covertkey_core::Result<f64> {
            Ok(kl_divergence(mac.p(role), mac.p(0))? - kl_divergence(mac.q(role), mac.q(0))?)
        };
        let chis: Vec<f64> = grid.iter().map(|r| covert::chi(&mac, r)).collect();
        summary.push(ChannelExample {
            name,
            kl_gaps: [gap(1)?, gap(2)?],
            rho,
            chi: covert::chi(&mac, &rho),
            kappa: covert::kappa(&mac, &rho)?,
            inner_corner: csk_inner_corner(&mac, &rho)?,
            outer_corner: csk_outer_corner(&mac, &rho)?,
            chi_range: [
                chis.iter().copied().fold(f64::INFINITY, f64::min),
                chis.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ],
        });
        let inner = csk_region(&mac, &grid, false)?;
        let outer = csk_region(&mac, &grid, true)?;
        out.write_with(&format!("{name}_csk_inner.csv"), |w| inner.write_csv(w))?;
        out.write_with(&format!("{name}_csk_outer.csv"), |w| outer.write_csv(w))?;
    }
    for s in &summary {
        println!(
            "{}: gaps {:.6} {:.6} bits, chi {:.6}, kappa {:.4}, inner corner ({:.4}, {:.4})",
            s.name, s.kl_gaps[0], s.kl_gaps[1], s.chi, s.kappa, s.inner_corner.r1, s.inner_corner.r2
        );
    }
    out.write_json("examples.json", &summary)?;
    Ok(())
}
