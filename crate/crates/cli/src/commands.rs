use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use carnot_verif::group::{CustomLaw, SelfCheckOptions};
use carnot_verif::keller_osserman::{ko_test, KoOptions, KoVerdict, NonlinearityTriple};
use carnot_verif::oracle::{
    classify_main, classify_main2, classify_maximum, classify_mean_curvature, classify_prop31, compare_literature,
    sigma_star, ParamSet, RangeVerdict,
};
use carnot_verif::weak_form::{Domain, PasteVerifyOptions, SharpnessGlue};
use carnot_verif::witness::{
    verify_basamento, verify_main_sharpness, verify_theorem_main_counterexamples,
    CounterexampleParams, MarginReport, MarginVerdict, RadiusSamples,
};
use carnot_verif::{CarnotGroup64, GroupDescriptor, GroupRegistry, PhiProfile64, ProfileDescriptor};

use crate::config::*;
use crate::error::CliError;
use crate::grid::PointSet;
use crate::output::{emit_json, emit_rows};

/// Resolved global settings: CLI flags over config values over defaults.
pub struct Ctx {
    pub cfg: RunConfig,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Ctx {
    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    s.as_ref()
        .ok_or_else(|| CliError::Usage(format!("config has no [{name}] section")))
}

fn str_of<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

// ---------------------------------------------------------------- classify

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifyRow {
    pub p: f64,
    pub chi: f64,
    pub mu: f64,
    pub omega: Option<f64>,
    pub sigma: Option<f64>,
    pub q: u32,
    pub theorem: String,
    pub tag: String,
    pub conclusion: String,
    pub applies: bool,
    pub h: Option<f64>,
    pub boundary: bool,
    pub violated: String,
    pub notes: String,
}

fn classify_points(c: &ClassifyConfig, random: Option<(usize, u64)>) -> Result<PointSet, CliError> {
    let mut axes = vec![("p", &c.p), ("chi", &c.chi), ("mu", &c.mu)];
    if let Some(w) = &c.omega {
        axes.push(("omega", w));
    }
    if let Some(s) = &c.sigma {
        axes.push(("sigma", s));
    }
    match random {
        Some((n, seed)) => PointSet::random(axes, n, seed),
        None => PointSet::grid(axes),
    }
}

fn named(names: &[&str], x: &[f64], key: &str) -> Option<f64> {
    names.iter().position(|n| *n == key).map(|i| x[i])
}

pub fn classify_point(c: &ClassifyConfig, names: &[&str], x: &[f64]) -> Vec<ClassifyRow> {
    let (p, chi, mu) = (x[0], x[1], x[2]);
    let omega = named(names, x, "omega");
    let sigma = named(names, x, "sigma");
    let mut ps = ParamSet::new(p, chi, mu, c.q);
    ps.omega = omega;
    if let Some(s) = sigma {
        ps = ps.with_sigma(s, c.growth);
    }
    ps.growth = c.growth;
    ps.gamma = c.gamma;
    ps.l_at_zero_positive = c.l_at_zero_positive;
    ps.symmetric = c.symmetric;

    let row = |theorem: &str, v: &RangeVerdict| ClassifyRow {
        p,
        chi,
        mu,
        omega,
        sigma,
        q: c.q,
        theorem: theorem.to_string(),
        tag: str_of(&v.tag),
        conclusion: str_of(&v.conclusion),
        applies: v.applies(),
        h: v.h,
        boundary: v.on_boundary(),
        violated: v.violated().join(";"),
        notes: v.notes.join(";"),
    };
    if let Err(e) = ps.validate() {
        return vec![ClassifyRow {
            p,
            chi,
            mu,
            omega,
            sigma,
            q: c.q,
            theorem: str_of(&c.theorem),
            tag: "none".into(),
            conclusion: "invalid".into(),
            applies: false,
            h: None,
            boundary: false,
            violated: String::new(),
            notes: e.to_string(),
        }];
    }
    let one = |t: Theorem| -> Vec<ClassifyRow> {
        let name = str_of(&t);
        match t {
            Theorem::Main => vec![row(&name, &classify_main(&ps))],
            Theorem::Main2 => vec![row(&name, &classify_main2(&ps))],
            Theorem::Prop31 => vec![row(&name, &classify_prop31(&ps))],
            Theorem::MeanCurvature => vec![row(&name, &classify_mean_curvature(&ps.mean_curvature_split()))],
            Theorem::Maximum => vec![row(&name, &classify_maximum(&ps))],
            Theorem::Literature => compare_literature(&ps).iter().map(|v| row(&name, v)).collect(),
            Theorem::All => unreachable!(),
        }
    };
    match c.theorem {
        Theorem::All => [
            Theorem::Main,
            Theorem::Main2,
            Theorem::Prop31,
            Theorem::MeanCurvature,
            Theorem::Maximum,
            Theorem::Literature,
        ]
        .into_iter()
        .flat_map(one)
        .collect(),
        t => one(t),
    }
}

fn rows_per_point(c: &ClassifyConfig) -> usize {
    match c.theorem {
        Theorem::Literature => 2,
        Theorem::All => 7,
        _ => 1,
    }
}

pub fn classify(ctx: &Ctx) -> Result<(), CliError> {
    let c = section(&ctx.cfg.classify, "classify")?;
    let pts = classify_points(c, None)?;
    pts.check_cap(ctx.cfg.limits.max_rows, rows_per_point(c))?;
    let rows: Vec<ClassifyRow> = (0..pts.len())
        .into_par_iter()
        .flat_map_iter(|i| classify_point(c, &pts.names, &pts.point(i)))
        .collect();
    info!("classify: {} rows", rows.len());
    emit_rows(&rows, ctx.format, ctx.out())
}

// ---------------------------------------------------------------------- ko

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KoRow {
    pub family: String,
    pub p: f64,
    pub a: f64,
    pub chi: f64,
    pub mu: f64,
    pub omega: f64,
    pub variant: String,
    pub verdict: String,
    pub tail_exponent: Option<f64>,
    pub margin: Option<f64>,
    pub k_tail_exponent: Option<f64>,
    pub f_tail_exponent: Option<f64>,
    /// Closed-form expectation: `(ω+1)/(p−a) > 1` or `ω > 1−χ`.
    pub expected_holds: bool,
    pub agrees: Option<bool>,
    pub note: String,
}

fn ko_points(k: &KoConfig, random: Option<(usize, u64)>) -> Result<PointSet, CliError> {
    let axes = vec![("p", &k.p), ("a", &k.a), ("chi", &k.chi), ("mu", &k.mu), ("omega", &k.omega)];
    match random {
        Some((n, seed)) => PointSet::random(axes, n, seed),
        None => PointSet::grid(axes),
    }
}

pub fn ko_point(k: &KoConfig, profile: Option<&ProfileDescriptor>, tol: &Tolerances, x: &[f64]) -> KoRow {
    let (p, a, chi, mu, omega) = (x[0], x[1], x[2], x[3], x[4]);
    let (expected_holds, family) = match k.family {
        KoFamily::Power => ((omega + 1.0) / (p - a) > 1.0, "power"),
        KoFamily::MeanCurvature => (omega > 1.0 - chi, "mean_curvature"),
    };
    let mut row = KoRow {
        family: family.into(),
        p,
        a,
        chi,
        mu,
        omega,
        variant: str_of(&k.variant),
        verdict: "error".into(),
        tail_exponent: None,
        margin: None,
        k_tail_exponent: None,
        f_tail_exponent: None,
        expected_holds,
        agrees: None,
        note: String::new(),
    };
    let prof = match (profile, k.family) {
        (Some(d), _) => PhiProfile64::from_descriptor(d),
        (None, KoFamily::Power) => PhiProfile64::p_laplacian(p),
        (None, KoFamily::MeanCurvature) => PhiProfile64::mean_curvature(2.0),
    };
    let triple = match k.family {
        KoFamily::Power => NonlinearityTriple::power_law(mu, omega, a, p),
        KoFamily::MeanCurvature => NonlinearityTriple::mean_curvature_family(mu, omega, chi),
    };
    let opts = KoOptions {
        t1: tol.ko_t1,
        delta_band: tol.ko_delta_band,
        ..KoOptions::default()
    };
    match prof.and_then(|prof| ko_test(&prof, &triple, k.variant, &opts)) {
        Ok(rep) => {
            row.verdict = str_of(&rep.verdict);
            row.tail_exponent = Some(rep.tail_exponent);
            row.margin = Some(rep.margin);
            row.k_tail_exponent = Some(rep.k_tail_exponent);
            row.f_tail_exponent = Some(rep.f_tail_exponent);
            row.agrees = match rep.verdict {
                KoVerdict::Holds => Some(expected_holds),
                KoVerdict::Fails => Some(!expected_holds),
                KoVerdict::Inconclusive => None,
            };
            row.note = rep.note.unwrap_or_default();
        }
        Err(e) => row.note = e.to_string(),
    }
    row
}

pub fn ko(ctx: &Ctx) -> Result<(), CliError> {
    let k = section(&ctx.cfg.ko, "ko")?;
    let pts = ko_points(k, None)?;
    pts.check_cap(ctx.cfg.limits.max_rows, 1)?;
    let prof = ctx.cfg.profile.as_ref();
    let tol = &ctx.cfg.tolerances;
    let rows: Vec<KoRow> = (0..pts.len())
        .into_par_iter()
        .map(|i| ko_point(k, prof, tol, &pts.point(i)))
        .collect();
    let disagree = rows.iter().filter(|r| r.agrees == Some(false)).count();
    if disagree > 0 {
        warn!("ko: {disagree} verdicts disagree with the closed-form expectation");
    }
    emit_rows(&rows, ctx.format, ctx.out())
}

// ----------------------------------------------------------------- witness

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessRow {
    pub mode: String,
    pub case: Option<u8>,
    pub chi: f64,
    pub mu: f64,
    pub omega: Option<f64>,
    pub sigma: Option<f64>,
    pub q: u32,
    pub certified: bool,
    pub verdict: String,
    pub c_star: Option<f64>,
    pub r_at_c_star: Option<f64>,
    pub c_certified: Option<f64>,
    pub min_margin: Option<f64>,
    pub tail_exponent: Option<f64>,
    pub analytic_gap: Option<f64>,
    pub gamma: Option<f64>,
    pub error: String,
}

fn witness_points(w: &WitnessConfig, random: Option<(usize, u64)>) -> Result<PointSet, CliError> {
    let mut axes = vec![("chi", &w.chi), ("mu", &w.mu)];
    if let Some(o) = &w.omega {
        axes.push(("omega", o));
    }
    if let Some(s) = &w.sigma {
        axes.push(("sigma", s));
    }
    match random {
        Some((n, seed)) => PointSet::random(axes, n, seed),
        None => PointSet::grid(axes),
    }
}

fn verdict_str(v: &MarginVerdict) -> String {
    match v {
        MarginVerdict::Certified => "certified".into(),
        MarginVerdict::ViolatedAt { r } => format!("violated_at r={r}"),
        MarginVerdict::AsymptoticFailure { exponent_gap } => format!("asymptotic_failure gap={exponent_gap}"),
    }
}

fn samples_of(w: &WitnessConfig) -> RadiusSamples {
    let d = RadiusSamples::default();
    RadiusSamples {
        r_min: w.r_min.unwrap_or(d.r_min),
        r_max: w.r_max.unwrap_or(d.r_max),
        n: w.samples.unwrap_or(d.n),
    }
}

pub fn witness_report(w: &WitnessConfig, names: &[&str], x: &[f64]) -> (WitnessRow, Result<MarginReport, CliError>) {
    let (chi, mu) = (x[0], x[1]);
    let omega = named(names, x, "omega");
    let sigma = named(names, x, "sigma");
    let samples = samples_of(w);
    let mut row = WitnessRow {
        mode: str_of(&w.mode),
        case: w.case,
        chi,
        mu,
        omega,
        sigma,
        q: w.q,
        certified: false,
        verdict: "error".into(),
        c_star: None,
        r_at_c_star: None,
        c_certified: None,
        min_margin: None,
        tail_exponent: None,
        analytic_gap: None,
        gamma: None,
        error: String::new(),
    };
    let rep: Result<MarginReport, CliError> = (|| match w.mode {
        WitnessMode::Basamento => {
            let s = sigma.ok_or_else(|| CliError::Usage("basamento needs sigma".into()))?;
            Ok(verify_basamento(s, w.q, &samples)?)
        }
        WitnessMode::Sharpness => {
            let s = match sigma {
                Some(s) => s,
                None => sigma_star(2.0, chi, mu)?,
            };
            row.sigma = Some(s);
            Ok(verify_main_sharpness(chi, mu, s, w.q, &samples)?)
        }
        WitnessMode::Counterexample => {
            let case = w
                .case
                .ok_or_else(|| CliError::Usage("counterexample mode needs case = 1, 2 or 3".into()))?;
            let omega = match (omega, case) {
                (Some(o), _) => o,
                (None, 2 | 3) => 1.0 - chi,
                (None, _) => return Err(CliError::Usage("case 1 needs omega".into())),
            };
            row.omega = Some(omega);
            let params = CounterexampleParams {
                chi,
                mu,
                omega,
                sigma,
                q: w.q,
            };
            Ok(verify_theorem_main_counterexamples(case, &params, &samples)?)
        }
    })();
    match &rep {
        Ok(r) => {
            row.certified = r.certified();
            row.verdict = verdict_str(&r.verdict);
            row.sigma = Some(r.witness.sigma);
            row.c_star = Some(r.c_star);
            row.r_at_c_star = Some(r.r_at_c_star);
            row.c_certified = Some(r.c_certified);
            row.min_margin = Some(r.min_margin);
            row.tail_exponent = Some(r.tail_exponent);
            row.analytic_gap = r.analytic_gap;
            row.gamma = r.gamma;
        }
        Err(e) => row.error = e.to_string(),
    }
    (row, rep)
}

#[derive(Serialize)]
struct MarginRow {
    point: usize,
    r: f64,
    lhs: f64,
    rhs: f64,
    margin: f64,
}

fn margins_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.margins.csv"))
}

pub fn witness(ctx: &Ctx) -> Result<(), CliError> {
    let w = section(&ctx.cfg.witness, "witness")?;
    let pts = witness_points(w, None)?;
    pts.check_cap(ctx.cfg.limits.max_rows, 1)?;
    let results: Vec<(WitnessRow, Result<MarginReport, CliError>)> = (0..pts.len())
        .into_par_iter()
        .map(|i| witness_report(w, &pts.names, &pts.point(i)))
        .collect();
    if results.len() == 1 {
        if let (_, Err(_)) = &results[0] {
            let (_, e) = results.into_iter().next().expect("one result");
            return Err(e.err().expect("error"));
        }
    }
    for (_, r) in &results {
        if let Err(CliError::Usage(m)) = r {
            return Err(CliError::Usage(m.clone()));
        }
    }
    let rows: Vec<&WitnessRow> = results.iter().map(|(r, _)| r).collect();
    emit_rows(&rows, ctx.format, ctx.out())?;
    if let Some(out) = ctx.out() {
        let path = margins_path(out);
        let mut c = csv::Writer::from_path(&path)?;
        for (i, (_, rep)) in results.iter().enumerate() {
            if let Ok(rep) = rep {
                for (r, lhs, rhs, margin) in rep.rows() {
                    c.serialize(MarginRow {
                        point: i,
                        r,
                        lhs,
                        rhs,
                        margin,
                    })?;
                }
            }
        }
        c.flush()?;
        info!("margins written to {}", path.display());
    }
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.certified)
        .map(|r| {
            if r.error.is_empty() {
                format!("chi={} mu={}: {}", r.chi, r.mu, r.verdict)
            } else {
                format!("chi={} mu={}: {}", r.chi, r.mu, r.error)
            }
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join("; ")))
    }
}

// ------------------------------------------------------------------- paste

/// Parses `"<inner|outer> > <level>"`, where level is a number, `gamma` or `<k>gamma`.
pub fn parse_mask(mask: &str, gamma: f64) -> Result<(String, f64), CliError> {
    let bad = || CliError::Usage(format!("bad mask {mask:?}: expected \"inner > 2gamma\" or similar"));
    let (field, level) = mask.split_once('>').ok_or_else(bad)?;
    let field = field.trim();
    if field != "inner" && field != "outer" {
        return Err(bad());
    }
    let level = level.trim().replace(' ', "");
    let value = if let Some(k) = level.strip_suffix("gamma") {
        let k = k.trim_end_matches('*');
        let k = if k.is_empty() { 1.0 } else { k.parse::<f64>().map_err(|_| bad())? };
        k * gamma
    } else {
        level.parse::<f64>().map_err(|_| bad())?
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok((field.to_string(), value))
}

pub fn paste(ctx: &Ctx) -> Result<(), CliError> {
    let pc = ctx.cfg.paste.clone().unwrap_or_default();
    if pc.nodes < 8 || pc.n_straddle > pc.n_bumps || !(pc.rho_min > 0.0 && pc.rho_max >= pc.rho_min) {
        return Err(CliError::Usage("paste needs nodes >= 8, n_straddle <= n_bumps, 0 < rho_min <= rho_max".into()));
    }
    let mut glue = SharpnessGlue::new(pc.nodes, pc.r_glue)?;
    let (field, level) = parse_mask(&pc.mask, glue.gamma)?;
    let u = if field == "inner" { glue.inner.clone() } else { glue.outer.clone() };
    glue.omega = Domain::superlevel(&glue.group, u, level);
    let opts = PasteVerifyOptions {
        n_bumps: pc.n_bumps,
        n_straddle: pc.n_straddle,
        rho_min: pc.rho_min,
        rho_max: pc.rho_max,
        seed: ctx.seed,
        ..PasteVerifyOptions::default()
    };
    let res = glue.verify(&opts)?;
    for w in &res.report.warnings {
        warn!("{w}");
    }
    emit_json(&res, ctx.out())?;
    if res.report.passed {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "max weak residual {:e} above tolerance {:e}",
            res.report.max_residual, res.tolerance
        )))
    }
}

// ------------------------------------------------------------------- sweep

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    points_done: usize,
    byte_offset: u64,
    total: usize,
}

fn checkpoint_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".checkpoint");
    PathBuf::from(s)
}

fn write_checkpoint(path: &Path, cp: &Checkpoint) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, serde_json::to_vec(cp)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn run_sweep<R, F>(
    ctx: &Ctx,
    pts: &PointSet,
    rows_per_point: usize,
    resume: bool,
    eval: F,
) -> Result<usize, CliError>
where
    R: Serialize + Send,
    F: Fn(&[f64]) -> Vec<R> + Sync,
{
    let total = pts.len();
    pts.check_cap(ctx.cfg.limits.max_rows, rows_per_point)?;
    let chunk = ctx.cfg.limits.checkpoint_every;
    let format = ctx.format;

    let (mut sink, mut start, cp_path): (Box<dyn Write>, usize, Option<PathBuf>) = match ctx.out() {
        Some(out) => {
            let cp_path = checkpoint_path(out);
            let mut start = 0;
            let file = if resume && cp_path.exists() {
                let cp: Checkpoint = serde_json::from_slice(&fs::read(&cp_path)?)
                    .map_err(|e| CliError::Usage(format!("bad checkpoint {}: {e}", cp_path.display())))?;
                if cp.total != total {
                    return Err(CliError::Usage(format!(
                        "checkpoint is for {} points, sweep has {total}",
                        cp.total
                    )));
                }
                let mut f = OpenOptions::new().write(true).open(out)?;
                f.set_len(cp.byte_offset)?;
                f.seek(SeekFrom::End(0))?;
                start = cp.points_done;
                info!("resuming at point {start} of {total}");
                f
            } else {
                if resume {
                    warn!("no checkpoint at {}; starting from scratch", cp_path.display());
                }
                File::create(out)?
            };
            (Box::new(file), start, Some(cp_path))
        }
        None => {
            if resume {
                return Err(CliError::Usage("--resume needs --out".into()));
            }
            (Box::new(std::io::stdout().lock()), 0, None)
        }
    };

    let mut rows_written = 0;
    let mut header = start == 0;
    while start < total {
        let end = (start + chunk).min(total);
        let rows: Vec<Vec<R>> = (start..end).into_par_iter().map(|i| eval(&pts.point(i))).collect();
        let mut buf = Vec::new();
        match format {
            Format::Csv => {
                let mut c = csv::WriterBuilder::new().has_headers(header).from_writer(&mut buf);
                for r in rows.iter().flatten() {
                    c.serialize(r)?;
                }
                c.flush()?;
            }
            Format::Json => {
                for r in rows.iter().flatten() {
                    serde_json::to_writer(&mut buf, r)?;
                    buf.push(b'\n');
                }
            }
        }
        header = false;
        rows_written += rows.iter().map(Vec::len).sum::<usize>();
        {
            let mut w = BufWriter::new(&mut sink);
            w.write_all(&buf)?;
            w.flush()?;
        }
        start = end;
        if let (Some(cp), Some(out)) = (&cp_path, ctx.out()) {
            let byte_offset = fs::metadata(out)?.len();
            write_checkpoint(
                cp,
                &Checkpoint {
                    points_done: start,
                    byte_offset,
                    total,
                },
            )?;
        }
        info!("sweep: {start}/{total} points");
    }
    sink.flush()?;
    Ok(rows_written)
}

pub fn sweep(ctx: &Ctx, resume: bool) -> Result<(), CliError> {
    let sc = ctx.cfg.sweep.clone().unwrap_or(SweepConfig {
        target: SweepTarget::Classify,
        mode: SweepMode::Grid,
        samples: None,
    });
    let random = match sc.mode {
        SweepMode::Grid => None,
        SweepMode::Random => Some((
            sc.samples
                .ok_or_else(|| CliError::Usage("random sweep needs samples".into()))?,
            ctx.seed,
        )),
    };
    let n = match sc.target {
        SweepTarget::Classify => {
            let c = section(&ctx.cfg.classify, "classify")?;
            let pts = classify_points(c, random)?;
            run_sweep(ctx, &pts, rows_per_point(c), resume, |x| classify_point(c, &pts.names, x))?
        }
        SweepTarget::Ko => {
            let k = section(&ctx.cfg.ko, "ko")?;
            let pts = ko_points(k, random)?;
            let prof = ctx.cfg.profile.as_ref();
            let tol = &ctx.cfg.tolerances;
            run_sweep(ctx, &pts, 1, resume, |x| vec![ko_point(k, prof, tol, x)])?
        }
        SweepTarget::Witness => {
            let w = section(&ctx.cfg.witness, "witness")?;
            let pts = witness_points(w, random)?;
            run_sweep(ctx, &pts, 1, resume, |x| vec![witness_report(w, &pts.names, x).0])?
        }
    };
    info!("sweep: {n} rows written");
    Ok(())
}

// --------------------------------------------------------------- selfcheck

/// Adds `x₀y₀²` to the first coordinate above layer 1 (or to `x₀` on a
/// one-layer group), which breaks dilation invariance.
fn broken_dilation(g: &CarnotGroup64) -> Result<CarnotGroup64, CliError> {
    let target = if g.layer_dims().len() > 1 { g.layer_dims()[0] } else { 0 };
    let (gc, gi, gn) = (g.clone(), g.clone(), g.clone());
    let law = CustomLaw {
        name: format!("{}+broken_dilation", g.name()),
        layer_dims: g.layer_dims().to_vec(),
        compose: Arc::new(move |x: &[f64], y: &[f64]| {
            let mut z = gc.compose(x, y).map(|p| p.0).unwrap_or_else(|_| x.to_vec());
            z[target] += x[0] * y[0] * y[0];
            z
        }),
        inverse: Arc::new(move |x: &[f64]| gi.inverse(x).map(|p| p.0).unwrap_or_else(|_| x.to_vec())),
        frame: None,
        norm: Arc::new(move |x: &[f64]| gn.hom_norm(x)),
        unit_ball_box: g.unit_ball_box().to_vec(),
    };
    Ok(CarnotGroup64::custom_unchecked(law)?)
}

pub fn selfcheck(ctx: &Ctx) -> Result<(), CliError> {
    let sc = ctx.cfg.selfcheck.clone().unwrap_or_default();
    let desc = ctx.cfg.group.clone().unwrap_or(GroupDescriptor::Heisenberg { m: 1 });
    let mut g = CarnotGroup64::from_descriptor(&desc, &GroupRegistry::default())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if sc.fault == Some(Fault::BrokenDilation) {
        g = broken_dilation(&g)?;
    }
    let d = SelfCheckOptions::default();
    let opts = SelfCheckOptions {
        n_triples: sc.n_triples.unwrap_or(d.n_triples),
        seed: ctx.seed,
        volume_samples: sc.volume_samples.or(d.volume_samples),
    };
    let rep = g.self_check(&opts);
    emit_json(&rep, ctx.out())?;
    let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{}: {}", rep.group, failed.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_syntax() {
        assert_eq!(parse_mask("inner > 2gamma", 0.5).unwrap(), ("inner".into(), 1.0));
        assert_eq!(parse_mask("outer>gamma", 0.5).unwrap(), ("outer".into(), 0.5));
        assert_eq!(parse_mask("inner > 3 * gamma", 0.5).unwrap(), ("inner".into(), 1.5));
        assert_eq!(parse_mask("inner > 0.25", 0.5).unwrap(), ("inner".into(), 0.25));
        assert!(parse_mask("v > 1", 0.5).is_err());
        assert!(parse_mask("inner < 1", 0.5).is_err());
    }

    #[test]
    fn margins_file_name() {
        assert_eq!(margins_path(Path::new("/tmp/w.json")), Path::new("/tmp/w.margins.csv"));
    }

    #[test]
    fn broken_dilation_fails_selfcheck() {
        let g = CarnotGroup64::heisenberg(1).unwrap();
        let b = broken_dilation(&g).unwrap();
        let rep = b.self_check(&SelfCheckOptions::quick());
        assert!(rep.checks.iter().any(|c| c.name == "dilation_automorphism" && !c.passed));
    }
}
