use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use ionsps::atom::{zeeman_shift, LEVELS};
use ionsps::bloch::{beat_frequency, dark_resonance_scan, Beat};
use ionsps::calibrate::{fit_dark_resonance, ScanData, PARAM_NAMES};
use ionsps::detect::{analytic_window_probabilities, simulate_counts_with, simulate_run_with, Configuration, RunConfig};
use ionsps::qng::{evaluate_witness, qng_threshold_point, WitnessCounts};
use ionsps::tags::{
    dark_corrected_alpha, g2_histogram_with, parse_csv, parse_tags, to_ttag_bytes, window_statistics_with, Channel,
    ClickStatistics, Estimate, Gate, RatioEstimate, TagStream, WindowCounts,
};

use crate::error::{CliError, CliResult};
use crate::output::{num, write_file, Report, Table};
use crate::{AnalyzeArgs, Context, FitArgs, ScanArgs, SimulateArgs, WitnessArgs};

const TWO_PI: f64 = 2.0 * PI;

fn finish(ctx: &Context, name: &str, report: Report) -> CliResult<String> {
    write_file(&ctx.out, name, report.text().as_bytes())?;
    Ok(report.text().to_owned())
}

pub fn scan(ctx: &Context, a: &ScanArgs) -> CliResult<String> {
    let cfg = &ctx.config;
    let grid_hz = cfg.scan_grid(a.start, a.stop, a.points)?;
    let grid: Vec<f64> = grid_hz.iter().map(|f| TWO_PI * f).collect();
    let points = dark_resonance_scan(
        &cfg.scheme()?,
        &cfg.cooling("scan")?,
        &cfg.repump("scan")?,
        &cfg.environment("scan")?,
        &cfg.detection_mode()?,
        &grid,
        ctx.exec,
    )?;

    let mut table = Table::new(&["detuning_hz", "rate_per_s"]);
    let mut failed = 0;
    let mut lowest: Option<(f64, f64)> = None;
    let mut highest: Option<(f64, f64)> = None;
    for (f, p) in grid_hz.iter().zip(&points) {
        let rate = match &p.rate {
            Ok(r) => *r,
            Err(_) => {
                failed += 1;
                f64::NAN
            }
        };
        table.row(&[num(*f), num(rate)]);
        if rate.is_finite() {
            if lowest.is_none_or(|(_, r)| rate < r) {
                lowest = Some((*f, rate));
            }
            if highest.is_none_or(|(_, r)| rate > r) {
                highest = Some((*f, rate));
            }
        }
    }
    let path = write_file(&ctx.out, "scan.csv", table.as_str().as_bytes())?;

    let mut r = Report::default();
    r.line("output", path.display());
    r.line("points", grid_hz.len());
    r.line("failed_points", failed);
    if let (Some(lo), Some(hi)) = (lowest, highest) {
        r.line("min_rate_per_s", num(lo.1));
        r.line("min_at_detuning_hz", num(lo.0));
        r.line("max_rate_per_s", num(hi.1));
        r.line("max_at_detuning_hz", num(hi.0));
    }
    if failed == grid_hz.len() {
        let first = points.into_iter().find_map(|p| p.rate.err()).expect("every point failed");
        return Err(first.into());
    }
    finish(ctx, "scan_report.txt", r)
}

pub fn wavepacket(ctx: &Context) -> CliResult<String> {
    let cfg = &ctx.config;
    let wp = cfg.wavepacket("wavepacket")?;
    let mut table = Table::new(&["time_s", "density_per_s"]);
    for (t, d) in wp.times().zip(wp.density()) {
        table.row(&[num(t), num(*d)]);
    }
    let path = write_file(&ctx.out, "wavepacket.csv", table.as_str().as_bytes())?;

    let b = cfg.environment("wavepacket")?.magnitude();
    let scheme = cfg.scheme()?;
    let splitting = (zeeman_shift(&scheme, LEVELS[5], b) - zeeman_shift(&scheme, LEVELS[4], b)) / TWO_PI;
    let mut r = Report::default();
    r.line("output", path.display());
    r.line("emission_probability", num(wp.contained_probability()));
    match wp.mean_arrival_time() {
        Ok(t) => r.line("mean_arrival_s", num(t)),
        Err(_) => r.line("mean_arrival_s", "undefined (no emission)"),
    }
    r.line("d_zeeman_splitting_hz", num(splitting));
    match beat_frequency(&wp) {
        Ok(Beat::Detected { frequency, resolution }) => {
            r.line("beat_hz", num(frequency));
            r.line("beat_resolution_hz", num(resolution));
            r.line("beat_matches_splitting", (frequency - splitting).abs() < resolution);
        }
        Ok(Beat::NoBeat) | Err(_) => r.line("beat_hz", "none"),
    }
    finish(ctx, "wavepacket_report.txt", r)
}

/// Angular frequencies are reported in Hz.
fn param_units(i: usize) -> (&'static str, f64) {
    match i {
        0..=2 => ("Hz", 1.0 / TWO_PI),
        3 | 4 => ("rad", 1.0),
        5 => ("T", 1.0),
        6 => ("1", 1.0),
        _ => ("counts/s", 1.0),
    }
}

pub fn fit(ctx: &Context, a: &FitArgs) -> CliResult<String> {
    let cfg = &ctx.config;
    let file = fs::File::open(&a.data).map_err(|e| CliError::Data(format!("cannot read {}: {e}", a.data.display())))?;
    let data = ScanData::from_csv(file)?;
    let (guess, bounds, mask) = cfg.fit_setup(a.free.as_deref())?;
    let mut model = cfg.scan_model("fit")?;
    model.exec = ctx.exec;
    let res = fit_dark_resonance(&model, &data, guess, &bounds, &mask)?;

    let (values, sigmas) = (res.params.to_array(), res.uncertainties().to_array());
    let mut table = Table::new(&["parameter", "unit", "value", "uncertainty", "free"]);
    for (i, name) in PARAM_NAMES.iter().enumerate() {
        let (unit, k) = param_units(i);
        let sigma = if mask.0[i] { num(k * sigmas[i]) } else { num(0.0) };
        table.row(&[name.to_string(), unit.into(), num(k * values[i]), sigma, mask.0[i].to_string()]);
    }
    let path = write_file(&ctx.out, "fit.csv", table.as_str().as_bytes())?;

    let fitted = model.rates(&data.detuning_hz, &res.params)?;
    let mut curve = Table::new(&["detuning_hz", "rate_cps", "sigma_cps", "model_cps"]);
    for (i, model) in fitted.iter().enumerate() {
        curve.row(&[num(data.detuning_hz[i]), num(data.rate[i]), num(data.sigma[i]), num(*model)]);
    }
    write_file(&ctx.out, "fit_curve.csv", curve.as_str().as_bytes())?;

    let mut r = Report::default();
    r.line("output", path.display());
    for (i, name) in PARAM_NAMES.iter().enumerate() {
        let (unit, k) = param_units(i);
        let v = if mask.0[i] {
            format!("{} +- {} {unit}", num(k * values[i]), num(k * sigmas[i]))
        } else {
            format!("{} {unit} (fixed)", num(k * values[i]))
        };
        r.line(name, v);
    }
    r.line("chi_square", num(res.chi_square));
    r.line("reduced_chi_square", num(res.reduced_chi_square));
    r.line("iterations", res.iterations);
    r.line("converged", res.converged);
    r.line("singular_covariance", res.singular);
    finish(ctx, "fit_report.txt", r)
}

fn config_name(c: Configuration) -> &'static str {
    match c {
        Configuration::Reflected => "reflected",
        Configuration::Symmetric => "symmetric",
    }
}

fn run_lines(r: &mut Report, run: &RunConfig) {
    r.line("configuration", format!("{:?}", config_name(run.configuration)));
    r.line("seed", run.seed);
    r.line("n_triggers", run.n_triggers);
    r.line("period_s", num(run.period));
    r.line("window_s", num(run.window));
}

pub fn simulate(ctx: &Context, a: &SimulateArgs) -> CliResult<String> {
    let cfg = &ctx.config;
    let run = cfg.run("simulate", ctx.seed)?;
    let source = cfg.source("simulate", &run)?;
    let (det_a, det_b) = cfg.detectors("simulate")?;
    let expected = analytic_window_probabilities(&source, &det_a, &det_b, &run)?;

    let mut r = Report::default();
    if a.counts_only {
        let c = simulate_counts_with(&source, &det_a, &det_b, &run, ctx.exec)?;
        let path = write_file(&ctx.out, "counts.csv", counts_table(&c).as_str().as_bytes())?;
        r.line("output", path.display());
    } else {
        let tags = simulate_run_with(&source, &det_a, &det_b, &run, ctx.exec)?;
        let path = write_file(&ctx.out, "tags.ttag", &to_ttag_bytes(&tags))?;
        r.line("output", path.display());
        r.line("tags", tags.len());
    }
    run_lines(&mut r, &run);
    let p = expected.click_probs();
    r.line("expected_ps", num(p.ps));
    r.line("expected_pc", num(p.pc));
    r.line("expected_alpha", num(expected.alpha()));
    // the sidecar is a pure function of the configuration and seed
    let mut side = Report::default();
    run_lines(&mut side, &run);
    side.line("expected_ps", num(p.ps));
    side.line("expected_pc", num(p.pc));
    side.line("expected_alpha", num(expected.alpha()));
    let name = if a.counts_only { "counts.toml" } else { "tags.toml" };
    write_file(&ctx.out, name, side.text().as_bytes())?;
    Ok(r.text().to_owned())
}

fn counts_table(c: &WindowCounts) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("triggers", c.triggers),
        ("singles", c.singles),
        ("coincidences", c.coincidences),
        ("clicks_a", c.clicks_a),
        ("clicks_b", c.clicks_b),
        ("tags_a", c.tags_a),
        ("tags_b", c.tags_b),
        ("pairs", c.pairs),
    ] {
        t.row(&[k.to_string(), v.to_string()]);
    }
    t
}

fn read_stream(path: &Path) -> CliResult<TagStream> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    if bytes.is_empty() {
        return Ok(TagStream::default());
    }
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let stream = if is_csv { parse_csv(bytes.as_slice()) } else { parse_tags(&bytes) };
    stream.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn seconds_to_ps(s: f64, what: &str) -> CliResult<i64> {
    let ps = (s * 1e12).round();
    if !ps.is_finite() || ps.abs() > 9e18 {
        return Err(CliError::Config(format!("{what} = {s} s is out of range")));
    }
    Ok(ps as i64)
}

fn positive_ps(s: f64, what: &str) -> CliResult<u64> {
    match seconds_to_ps(s, what)? {
        v if v > 0 => Ok(v as u64),
        _ => Err(CliError::Config(format!("{what} must be positive, got {s} s"))),
    }
}

fn estimate_row(t: &mut Table, name: &str, e: &Estimate) {
    t.row(&[name.to_string(), num(e.value), num(e.lower), num(e.upper)]);
}

fn ratio_row(t: &mut Table, name: &str, e: &Option<RatioEstimate>) {
    match e {
        Some(e) => t.row(&[name.to_string(), num(e.value), num(e.lower), num(e.upper)]),
        None => t.row(&[name, "nan", "nan", "nan"]),
    }
}

pub fn analyze(ctx: &Context, a: &AnalyzeArgs) -> CliResult<String> {
    let window_ps = positive_ps(a.window, "window")?;
    let period_ps = a.period.map(|p| positive_ps(p, "period")).transpose()?;
    let bin_ps = positive_ps(a.bin, "bin")?;
    let default_span = a.period.map_or(1e-6, |p| 3.5 * p);
    let tau_min = seconds_to_ps(a.tau_min.unwrap_or(-default_span), "tau-min")?;
    let tau_max = seconds_to_ps(a.tau_max.unwrap_or(default_span), "tau-max")?;
    let gate = match (a.gate_offset, a.gate_length) {
        (Some(o), Some(l)) => Some(Gate { offset_ps: seconds_to_ps(o, "gate-offset")?.max(0) as u64, length_ps: positive_ps(l, "gate-length")? }),
        _ => None,
    };

    let stream = read_stream(&a.input)?;
    let has_triggers = stream.count(Channel::Trigger) > 0;
    let window = window_ps as f64 * 1e-12;

    let mut stats_table = Table::new(&["quantity", "value", "lower", "upper"]);
    let mut r = Report::default();
    let stats = if has_triggers { Some(window_statistics_with(&stream, window, ctx.exec)?) } else { None };
    let counts = stats.as_ref().map_or_else(WindowCounts::default, |s| s.counts);
    for row in counts_table(&counts).as_str().lines().skip(1) {
        let (k, v) = row.split_once(',').expect("two columns");
        stats_table.row(&[k, v, "", ""]);
    }
    match &stats {
        Some(s) => write_estimates(&mut stats_table, s),
        None => {
            // no triggers: every probability is zero with the uninformative interval
            let zero = Estimate { value: 0.0, lower: 0.0, upper: 1.0 };
            for name in ["ps", "pc", "pa", "pb"] {
                estimate_row(&mut stats_table, name, &zero);
            }
            ratio_row(&mut stats_table, "alpha", &None);
            ratio_row(&mut stats_table, "g2_zero", &None);
        }
    }
    let corrected = match (a.dark_a, a.dark_b, &stats) {
        (Some(da), Some(db), Some(s)) => Some(dark_corrected_alpha(s, da, db, a.dark_sigma)?),
        _ => None,
    };
    if let Some(d) = &corrected {
        stats_table.row(&["accidental_pc".into(), num(d.accidental_pc), String::new(), String::new()]);
        stats_table.row(&["alpha_upper".into(), num(d.alpha_upper), String::new(), String::new()]);
    }
    let path = write_file(&ctx.out, "stats.csv", stats_table.as_str().as_bytes())?;

    let hist = g2_histogram_with(&stream, tau_min, tau_max, bin_ps, gate, ctx.exec)?;
    let mut g2 = Table::new(&["tau_s", "pairs"]);
    for (k, c) in hist.counts.iter().enumerate() {
        g2.row(&[num(hist.bin_center(k) * 1e-12), c.to_string()]);
    }
    write_file(&ctx.out, "g2.csv", g2.as_str().as_bytes())?;

    r.line("output", path.display());
    r.line("tags", stream.len());
    r.line("triggers", counts.triggers);
    r.line("singles", counts.singles);
    r.line("coincidences", counts.coincidences);
    match &stats {
        Some(s) => {
            let ci = |e: &Estimate| format!("{} [{}, {}] (95% CI)", num(e.value), num(e.lower), num(e.upper));
            r.line("ps", ci(&s.ps));
            r.line("pc", ci(&s.pc));
            if let Some(al) = s.alpha {
                r.line("alpha", format!("{} [{}, {}] (95% CI)", num(al.value), num(al.lower), num(al.upper)));
            }
        }
        None => r.line("note", "no trigger tags; all statistics are zero"),
    }
    if let Some(d) = &corrected {
        r.line("accidental_pc", num(d.accidental_pc));
        r.line("alpha_upper_95", num(d.alpha_upper));
    }
    if let Some(p) = period_ps {
        match hist.pulsed_g2_zero(p, window_ps) {
            Some(g) => r.line("pulsed_g2_zero", num(g)),
            None => r.line("pulsed_g2_zero", "undefined"),
        }
        if let Some(ratio) = hist.central_to_side_ratio(p, window_ps) {
            r.line("central_to_side_ratio", num(ratio));
        }
    }
    finish(ctx, "analyze_report.txt", r)
}

fn write_estimates(t: &mut Table, s: &ClickStatistics) {
    estimate_row(t, "ps", &s.ps);
    estimate_row(t, "pc", &s.pc);
    estimate_row(t, "pa", &s.pa);
    estimate_row(t, "pb", &s.pb);
    ratio_row(t, "alpha", &s.alpha);
    ratio_row(t, "g2_zero", &s.g2_zero);
}

/// Trigger, single and coincidence counts from a `stats.csv`.
fn counts_from_stats(path: &Path) -> CliResult<WitnessCounts> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let find = |key: &str| -> CliResult<u64> {
        let line = text
            .lines()
            .find(|l| l.split(',').next() == Some(key))
            .ok_or_else(|| CliError::Data(format!("{}: no `{key}` row", path.display())))?;
        let value = line.split(',').nth(1).unwrap_or("");
        value.parse().map_err(|_| CliError::Data(format!("{}: `{key}` value {value:?} is not a count", path.display())))
    };
    Ok(WitnessCounts { triggers: find("triggers")?, singles: find("singles")?, coincidences: find("coincidences")? })
}

pub fn witness(ctx: &Context, a: &WitnessArgs) -> CliResult<String> {
    if a.v_points == 0 || !(a.v_min > 0.0 && a.v_min <= a.v_max && a.v_max <= 1.0) {
        return Err(CliError::Config(format!(
            "threshold grid needs 0 < v-min <= v-max <= 1 and v-points > 0, got [{}, {}] with {} points",
            a.v_min, a.v_max, a.v_points
        )));
    }
    let counts = match (&a.stats, a.triggers, a.singles, a.coincidences) {
        (Some(p), ..) => counts_from_stats(p)?,
        (None, Some(triggers), Some(singles), Some(coincidences)) => WitnessCounts { triggers, singles, coincidences },
        _ => return Err(CliError::Config("give --stats or all of --triggers, --singles, --coincidences".into())),
    };

    let mut curve = Table::new(&["v", "ps", "pc"]);
    for i in 0..a.v_points {
        let v = if a.v_points == 1 { a.v_min } else { a.v_min + (a.v_max - a.v_min) * i as f64 / (a.v_points - 1) as f64 };
        let p = qng_threshold_point(v)?;
        curve.row(&[num(v), num(p.ps), num(p.pc)]);
    }
    write_file(&ctx.out, "threshold.csv", curve.as_str().as_bytes())?;

    let v = evaluate_witness(counts)?;
    let mut t = Table::new(&["quantity", "value"]);
    for (k, x) in [
        ("ps", v.measured.ps),
        ("ps_lower", v.ps_interval.0),
        ("ps_upper", v.ps_interval.1),
        ("pc", v.measured.pc),
        ("pc_lower", v.pc_interval.0),
        ("pc_upper", v.pc_interval.1),
        ("threshold_pc", v.threshold_pc),
        ("distance_sd", v.distance_sd),
        ("nc_bound_ps", v.nc_bound_ps),
        ("nc_distance_sd", v.nc_distance_sd),
    ] {
        t.row(&[k.to_string(), num(x)]);
    }
    t.row(&["qng_violation", if v.violation { "1" } else { "0" }]);
    t.row(&["nc_violation", if v.nc_violation { "1" } else { "0" }]);
    let path = write_file(&ctx.out, "witness.csv", t.as_str().as_bytes())?;

    let mut r = Report::default();
    r.line("output", path.display());
    r.line("triggers", counts.triggers);
    r.line("ps", format!("{} [{}, {}] (95% CI)", num(v.measured.ps), num(v.ps_interval.0), num(v.ps_interval.1)));
    r.line("pc", format!("{} [{}, {}] (95% CI)", num(v.measured.pc), num(v.pc_interval.0), num(v.pc_interval.1)));
    r.line("gaussian_threshold_pc", num(v.threshold_pc));
    r.line("qng_distance_sd", num(v.distance_sd));
    r.line("qng_verdict", if v.violation { "quantum non-Gaussian" } else { "compatible with Gaussian states" });
    r.line("classical_bound_ps", num(v.nc_bound_ps));
    r.line("nc_distance_sd", num(v.nc_distance_sd));
    r.line("classical_verdict", if v.nc_violation { "non-classical" } else { "classical-compatible" });
    finish(ctx, "witness_report.txt", r)
}
