use anyhow::{anyhow, Context as _};
use serde::Serialize;
use serde_json::{json, Map, Value};

use dicke_battery::analytic::{build_solution, BoundLuminositySolution, Branch};
use dicke_battery::battery::{scaling_study, BatteryCurve, SweepMode};
use dicke_battery::dynamics::{
    integrate, spin_to_canonical, CanonicalSpin, IntegrationOptions, PhaseState, PoleConvention,
    SpinVector, State, SystemKind,
};
use dicke_battery::elliptic::EllipticModulus;
use dicke_battery::format::number;
use dicke_battery::model::{critical_coupling, ModelConfig, ModelParams};
use dicke_battery::validate::{run_validation, ValidationOptions};
use dicke_battery::Error;

use crate::args::{
    AnalyticArgs, BranchArg, Format, GlobalArgs, ModeArg, SamplesArgs, ScalingArgs, SimulateArgs,
    SystemArg, ValidateArgs,
};
use crate::config::{self, RunSection};

/// Why a command stopped: bad input (exit 1) or a failed computation (exit 2).
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Compute(anyhow::Error),
}

pub type CmdResult<T> = std::result::Result<T, Failure>;

trait Classify<T> {
    fn config(self) -> CmdResult<T>;
    fn compute(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn config(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Config(e.into()))
    }

    fn compute(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Compute(e.into()))
    }
}

/// Output of a command. `success = false` still writes `body` but exits 2.
pub struct Outcome {
    pub body: String,
    pub messages: Vec<String>,
    pub warnings: Vec<String>,
    pub success: bool,
}

pub struct Context {
    pub global: GlobalArgs,
    pub run: RunSection,
    pub params: ModelParams,
}

impl Context {
    fn format(&self, default: Format) -> Format {
        self.global.format.or(self.run.format).unwrap_or(default)
    }

    fn moduli(&self, default: &[f64]) -> CmdResult<Vec<f64>> {
        let ks = config::moduli(&self.global, &self.run).unwrap_or_else(|| default.to_vec());
        if ks.is_empty() {
            return Err(Failure::Config(anyhow!("--k needs at least one value")));
        }
        for &k in &ks {
            if !(k.is_finite() && k > 0.0) {
                return Err(Failure::Config(anyhow!(
                    "--k values must be positive, got {k}"
                )));
            }
        }
        Ok(ks)
    }

    fn single_modulus(&self, default: Option<f64>) -> CmdResult<Option<f64>> {
        match config::moduli(&self.global, &self.run) {
            None => Ok(default),
            Some(ks) if ks.len() == 1 => Ok(Some(self.moduli(&[])?[0])),
            Some(ks) => Err(Failure::Config(anyhow!(
                "this command takes a single --k value, got {}",
                ks.len()
            ))),
        }
    }

    fn tol(&self) -> CmdResult<f64> {
        config::tol(&self.global, &self.run).config()
    }

    fn samples(&self, local: Option<usize>, default: usize) -> CmdResult<usize> {
        let n = local.or(self.run.samples).unwrap_or(default);
        if n < 2 {
            return Err(Failure::Config(anyhow!(
                "--samples must be at least 2, got {n}"
            )));
        }
        Ok(n)
    }

    fn echo<R: Serialize>(&self, command: &str, run: &R) -> Value {
        json!({ "command": command, "model": ModelConfig::from(self.params), "run": run })
    }
}

fn modulus(k: f64) -> CmdResult<EllipticModulus> {
    EllipticModulus::new(k).config()
}

/// The bound luminosity state exists only for `−1 ≤ ε < 0` and `λ > λ_c`.
fn require_bound_state(p: &ModelParams) -> CmdResult<()> {
    p.require_attractive().config()?;
    let lambda_c = critical_coupling(p).config()?;
    if p.coupling() <= lambda_c {
        return Err(Failure::Config(
            Error::NoRealSolution {
                lambda: p.coupling(),
                lambda_c,
            }
            .into(),
        ));
    }
    Ok(())
}

fn csv_document(echo: &Value, header: &str, rows: Vec<String>) -> String {
    let mut out = format!("# config: {echo}\n{header}\n");
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

fn json_document(echo: Value, body: Value) -> String {
    let mut doc = Map::new();
    doc.insert("config".into(), echo);
    if let Value::Object(fields) = body {
        doc.extend(fields);
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
    text.push('\n');
    text
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn sample_window(sol: &BoundLuminositySolution) -> f64 {
    sol.sx_period().unwrap_or(8.0 / sol.omega_big)
}

#[derive(Serialize)]
struct SimulateRun {
    system: SystemArg,
    k: Option<f64>,
    init: Option<Vec<f64>>,
    branch: BranchArg,
    t_end: f64,
    dt_out: f64,
    tol: f64,
    format: Format,
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> CmdResult<Outcome> {
    let p = &ctx.params;
    let system = args.system.or(ctx.run.system).unwrap_or(SystemArg::Reduced);
    let branch = args.branch.or(ctx.run.branch).unwrap_or(BranchArg::Minus);
    let k = ctx.single_modulus(None)?;
    let init = args.init.clone().or_else(|| ctx.run.init.clone());
    let tol = ctx.tol()?;
    let format = ctx.format(Format::Csv);

    match system {
        SystemArg::Qphi if p.epsilon() != -1.0 => {
            return Err(Failure::Config(anyhow!(
                "the qphi system requires epsilon = -1, got {}",
                p.epsilon()
            )))
        }
        SystemArg::Reduced if p.epsilon() >= 0.0 => {
            return Err(Failure::Config(anyhow!(
                "the reduced system requires epsilon < 0, got {}",
                p.epsilon()
            )))
        }
        _ => {}
    }

    let (initial, default_t_end) = match (k, &init) {
        (Some(_), Some(_)) => bail_config("give either --k or --init, not both")?,
        (None, None) => bail_config("an initial condition is required: --k or --init")?,
        (Some(k), None) => {
            require_bound_state(p)?;
            let sol = build_solution(p, modulus(k)?, branch.into()).config()?;
            let spin = sol.spin_at(0.0);
            let state = match system {
                SystemArg::Full => State::Full(PhaseState::adiabatic(spin, p)),
                SystemArg::Reduced => State::Reduced(spin),
                SystemArg::Qphi => State::QPhi(
                    spin_to_canonical(&spin, p.spin(), PoleConvention::ZeroAngle).config()?,
                ),
            };
            (state, sample_window(&sol))
        }
        (None, Some(v)) => (explicit_state(system, v, p)?, 10.0),
    };

    let t_end = args.t_end.or(ctx.run.t_end).unwrap_or(default_t_end);
    let dt_out = args.dt_out.or(ctx.run.dt_out).unwrap_or(t_end / 1000.0);
    let opts = IntegrationOptions::new(t_end, dt_out, tol).config()?;
    let echo = ctx.echo(
        "simulate",
        &SimulateRun {
            system,
            k,
            init,
            branch,
            t_end,
            dt_out,
            tol,
            format,
        },
    );

    let traj = integrate(initial, p, &opts)
        .context("integration failed")
        .compute()?;
    let (norm_drift, energy_drift) = (traj.spin_norm_drift(), traj.energy_drift());
    let body = match format {
        Format::Csv => {
            let mut buf = format!("# config: {echo}\n").into_bytes();
            traj.write_csv(&mut buf).compute()?;
            String::from_utf8(buf).expect("ascii output")
        }
        Format::Json => json_document(
            echo,
            json!({
                "drift": { "spin_norm": norm_drift, "energy": energy_drift },
                "trajectory": traj,
            }),
        ),
    };
    Ok(Outcome {
        body,
        messages: vec![format!(
            "spin_norm_drift = {}, energy_drift = {}, samples = {}, steps = {}",
            number(norm_drift),
            number(energy_drift),
            traj.len(),
            traj.stats.accepted
        )],
        warnings: vec![],
        success: true,
    })
}

fn bail_config<T>(msg: &str) -> CmdResult<T> {
    Err(Failure::Config(anyhow!("{msg}")))
}

fn explicit_state(system: SystemArg, v: &[f64], p: &ModelParams) -> CmdResult<State> {
    let expected = match system {
        SystemArg::Full => 5,
        SystemArg::Reduced => 3,
        SystemArg::Qphi => 2,
    };
    if v.len() != expected || v.iter().any(|x| !x.is_finite()) {
        return bail_config(&format!(
            "--init for the {:?} system needs {expected} finite values, got {}",
            SystemKind::from(system),
            v.len()
        ));
    }
    Ok(match system {
        SystemArg::Full => State::Full(PhaseState {
            q: v[0],
            p: v[1],
            sx: v[2],
            sy: v[3],
            sz: v[4],
        }),
        SystemArg::Reduced => State::Reduced(SpinVector::new(v[0], v[1], v[2])),
        SystemArg::Qphi => {
            if v[0].abs() > 2.0 * p.spin() {
                return bail_config(&format!("|Q| must not exceed 2S = {}", 2.0 * p.spin()));
            }
            State::QPhi(CanonicalSpin {
                big_q: v[0],
                phi: v[1],
            })
        }
    })
}

#[derive(Serialize)]
struct AnalyticRun {
    k: Vec<f64>,
    branch: BranchArg,
    samples: usize,
    compare: bool,
    tol: f64,
    format: Format,
}

pub fn analytic(ctx: &Context, args: &AnalyticArgs) -> CmdResult<Outcome> {
    let p = &ctx.params;
    let ks = ctx.moduli(&[0.8])?;
    let branch = args.branch.or(ctx.run.branch).unwrap_or(BranchArg::Minus);
    let samples = ctx.samples(args.samples, 200)?;
    let compare = args.compare || ctx.run.compare.unwrap_or(false);
    let tol = ctx.tol()?;
    let format = ctx.format(Format::Csv);
    require_bound_state(p)?;
    let mut plans = Vec::new();
    for &k in &ks {
        let sol = build_solution(p, modulus(k)?, branch.into()).config()?;
        let window = sample_window(&sol);
        let opts = IntegrationOptions::new(window, window / samples as f64, tol).config()?;
        plans.push((sol, opts));
    }
    let echo = ctx.echo(
        "analytic",
        &AnalyticRun {
            k: ks,
            branch,
            samples,
            compare,
            tol,
            format,
        },
    );

    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut messages = Vec::new();
    for (sol, opts) in &plans {
        let times = opts.sample_times();
        let numeric = if compare {
            let traj = integrate(State::Reduced(sol.spin_at(0.0)), p, opts)
                .context("integration failed")
                .compute()?;
            Some(traj.spins())
        } else {
            None
        };
        let mut worst: f64 = 0.0;
        for (i, &t) in times.iter().enumerate() {
            let s = sol.spin_at(t);
            let mut row = [sol.k.value(), t, s.sx, s.sy, s.sz].map(number).join(",");
            if let Some(ode) = &numeric {
                let diff = (ode[i].sx - s.sx).abs();
                worst = worst.max(diff);
                row.push_str(&format!(",{},{}", number(ode[i].sx), number(diff)));
            }
            rows.push(row);
        }
        let mut entry = serde_json::to_value(sol.summary()).expect("serializable");
        entry["period"] = json!(sol.sx_period());
        if compare {
            entry["max_abs_dsx"] = json!(worst);
            messages.push(format!(
                "k = {}: max |sx - sx_ode| = {}",
                number(sol.k.value()),
                number(worst)
            ));
        }
        entries.push(entry);
    }
    let body = match format {
        Format::Csv => {
            let header = if compare {
                "k,t,sx,sy,sz,sx_ode,abs_dsx"
            } else {
                "k,t,sx,sy,sz"
            };
            csv_document(&echo, header, rows)
        }
        Format::Json => json_document(echo, json!({ "solutions": entries })),
    };
    Ok(Outcome {
        body,
        messages,
        warnings: vec![],
        success: true,
    })
}

#[derive(Serialize)]
struct CurveRun {
    k: Vec<f64>,
    samples: usize,
    format: Format,
}

type Curves = (Vec<BoundLuminositySolution>, Vec<(f64, String)>);

/// Builds one solution per modulus, collecting infeasible ones as errors.
fn curve_solutions(
    p: &ModelParams,
    ks: &[f64],
) -> CmdResult<Curves> {
    require_bound_state(p)?;
    let mut sols = Vec::new();
    let mut errors = Vec::new();
    for &k in ks {
        match build_solution(p, modulus(k)?, Branch::Minus) {
            Ok(sol) => sols.push(sol),
            Err(e) => errors.push((k, e.to_string())),
        }
    }
    Ok((sols, errors))
}

fn error_entries(errors: &[(f64, String)]) -> (Value, Vec<String>) {
    let json = errors
        .iter()
        .map(|(k, r)| json!({ "k": k, "reason": r }))
        .collect();
    let text = errors
        .iter()
        .map(|(k, r)| format!("k = {}: {r}", number(*k)))
        .collect();
    (Value::Array(json), text)
}

fn finish_curves(
    echo: Value,
    format: Format,
    header: &str,
    rows: Vec<String>,
    curves: Vec<Value>,
    errors: &[(f64, String)],
) -> CmdResult<Outcome> {
    let (error_json, warnings) = error_entries(errors);
    if curves.is_empty() {
        return Err(Failure::Compute(anyhow!(
            "no curve could be built: {}",
            warnings.join("; ")
        )));
    }
    let body = match format {
        Format::Csv => {
            let mut doc = csv_document(&echo, header, rows);
            for w in &warnings {
                doc.push_str(&format!("# error {w}\n"));
            }
            doc
        }
        Format::Json => json_document(echo, json!({ "curves": curves, "errors": error_json })),
    };
    Ok(Outcome {
        body,
        messages: vec![],
        warnings,
        success: true,
    })
}

pub fn potential(ctx: &Context, args: &SamplesArgs) -> CmdResult<Outcome> {
    let p = &ctx.params;
    let ks = ctx.moduli(&[0.5, 0.8, 1.0, 1.2])?;
    let samples = ctx.samples(args.samples, 400)?;
    let format = ctx.format(Format::Csv);
    let (sols, errors) = curve_solutions(p, &ks)?;
    let echo = ctx.echo(
        "potential",
        &CurveRun {
            k: ks,
            samples,
            format,
        },
    );

    let s = p.spin();
    let grid: Vec<f64> = (0..=samples)
        .map(|i| s * (2.0 * i as f64 / samples as f64 - 1.0))
        .collect();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for sol in &sols {
        let u: Vec<f64> = grid.iter().map(|&x| sol.potential(x)).collect();
        for (x, u) in grid.iter().zip(&u) {
            rows.push([sol.k.value(), *x, *u, sol.const_c].map(number).join(","));
        }
        curves.push(json!({
            "k": sol.k.value(),
            "C": sol.const_c,
            "E": sol.energy,
            "regime": sol.regime(),
            "well_position": sol.potential_minimum(),
            "sx": grid,
            "U": u,
        }));
    }
    finish_curves(echo, format, "k,sx,U,C", rows, curves, &errors)
}

pub fn battery(ctx: &Context, args: &SamplesArgs) -> CmdResult<Outcome> {
    let p = &ctx.params;
    let ks = ctx.moduli(&[0.5, 0.8, 1.0, 1.2, 2.0])?;
    let samples = ctx.samples(args.samples, 500)?;
    let format = ctx.format(Format::Csv);
    let (sols, errors) = curve_solutions(p, &ks)?;
    let echo = ctx.echo(
        "battery",
        &CurveRun {
            k: ks,
            samples,
            format,
        },
    );

    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for sol in &sols {
        let curve = BatteryCurve::one_period(sol, samples).compute()?;
        for s in &curve.samples {
            rows.push(
                [sol.k.value(), s.t, s.energy, s.power]
                    .map(number)
                    .join(","),
            );
        }
        curves.push(json!({
            "k": sol.k.value(),
            "t_c": curve.t_c,
            "e_max": curve.e_max,
            "period": sol.period(),
            "samples": curve.samples,
        }));
    }
    finish_curves(echo, format, "k,t,E_B,P", rows, curves, &errors)
}

#[derive(Serialize)]
struct ScalingRun {
    k: f64,
    n_values: Vec<u64>,
    mode: ModeArg,
    format: Format,
}

pub const DEFAULT_SWEEP: [u64; 6] = [100, 200, 400, 800, 1600, 3200];
const R2_THRESHOLD: f64 = 0.999;

pub fn scaling(ctx: &Context, args: &ScalingArgs) -> CmdResult<Outcome> {
    let k = ctx.single_modulus(Some(0.8))?.expect("default modulus");
    let requested = args
        .n_values
        .clone()
        .or_else(|| ctx.run.n_values.clone())
        .unwrap_or(DEFAULT_SWEEP.to_vec());
    let mode = args.mode.or(ctx.run.mode).unwrap_or(ModeArg::FixedLambda);
    let format = ctx.format(Format::Json);
    ctx.params.require_attractive().config()?;

    if let Some(bad) = requested.iter().find(|n| **n == 0 || **n % 2 == 1) {
        return bail_config(&format!(
            "N values must be positive and even (N = 2S), got {bad}"
        ));
    }
    let mut n_values = requested.clone();
    n_values.sort_unstable();
    n_values.dedup();
    let mut warnings = Vec::new();
    if n_values.len() < requested.len() {
        warnings.push(format!(
            "removed {} duplicate N value(s)",
            requested.len() - n_values.len()
        ));
    }
    if n_values.len() < dicke_battery::battery::MIN_FIT_POINTS {
        return bail_config(&format!(
            "at least {} distinct N values are required, got {}",
            dicke_battery::battery::MIN_FIT_POINTS,
            n_values.len()
        ));
    }
    let decades = (n_values[n_values.len() - 1] as f64 / n_values[0] as f64).log10();
    if decades < dicke_battery::battery::MIN_SWEEP_DECADES - 1e-9 {
        return bail_config(&format!(
            "N values span {decades:.3} decades, at least {} required",
            dicke_battery::battery::MIN_SWEEP_DECADES
        ));
    }
    let km = modulus(k)?;
    let echo = ctx.echo(
        "scaling",
        &ScalingRun {
            k,
            n_values: n_values.clone(),
            mode,
            format,
        },
    );

    let report = match scaling_study(&ctx.params, &n_values, km, SweepMode::from(mode)) {
        Ok(r) => r,
        Err(Error::InsufficientPoints {
            valid,
            required,
            failures,
        }) => {
            let list: Vec<String> = failures
                .iter()
                .map(|(n, r)| format!("N = {n}: {r}"))
                .collect();
            return Err(Failure::Compute(anyhow!(
                "only {valid} of the required {required} sweep points are valid:\n  {}",
                list.join("\n  ")
            )));
        }
        Err(e) => return Err(Failure::Compute(e.into())),
    };

    let mut messages = Vec::new();
    for (name, fit) in [
        ("p_avg", &report.fits.p_avg),
        ("p_max", &report.fits.p_max),
        ("t_c", &report.fits.t_c),
    ] {
        messages.push(format!(
            "exponent {name} = {}, r2 = {}",
            number(fit.exponent),
            number(fit.r_squared)
        ));
    }
    for f in &report.failures {
        warnings.push(format!("N = {} excluded: {}", f.n, f.reason));
    }
    let success = report.min_r_squared() >= R2_THRESHOLD;
    if !success {
        messages.push(format!("fit quality below r2 = {R2_THRESHOLD}"));
    }
    let body = match format {
        Format::Json => json_document(echo, serde_json::to_value(&report).expect("serializable")),
        Format::Csv => {
            let rows = report
                .entries
                .iter()
                .map(|e| {
                    let values = [e.omega_big, e.t_c, e.e_max, e.p_max, e.p_avg].map(number);
                    format!("{},{}", e.n, values.join(","))
                })
                .collect();
            let mut doc = csv_document(&echo, "N,Omega,t_c,e_max,p_max,p_avg", rows);
            for m in &messages {
                doc.push_str(&format!("# {m}\n"));
            }
            doc
        }
    };
    Ok(Outcome {
        body,
        messages,
        warnings,
        success,
    })
}

#[derive(Serialize)]
struct ValidateRun {
    perturb_omega: f64,
    tol: f64,
    format: Format,
}

pub fn validate(ctx: &Context, args: &ValidateArgs) -> CmdResult<Outcome> {
    let format = if args.json {
        Format::Json
    } else {
        ctx.format(Format::Csv)
    };
    let perturb_omega = args.perturb_omega.or(ctx.run.perturb_omega).unwrap_or(0.0);
    if !perturb_omega.is_finite() {
        return bail_config("--perturb-omega must be finite");
    }
    let tol = ctx.tol()?;
    let echo = ctx.echo(
        "validate",
        &ValidateRun {
            perturb_omega,
            tol,
            format,
        },
    );

    let report = run_validation(&ValidationOptions {
        params: ctx.params,
        omega_perturbation: perturb_omega,
        tol,
    });
    let messages = report
        .checks
        .iter()
        .map(|c| {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            format!(
                "{verdict} {} (value {}, tolerance {})",
                c.name,
                number(c.value),
                number(c.tolerance)
            )
        })
        .collect();
    let body = match format {
        Format::Json => {
            let failures: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
            let mut v = serde_json::to_value(&report).expect("serializable");
            v["failures"] = json!(failures);
            json_document(echo, v)
        }
        Format::Csv => {
            let rows = report
                .checks
                .iter()
                .map(|c| {
                    format!(
                        "{},{},{},{},{}",
                        c.name,
                        c.passed,
                        number(c.value),
                        number(c.tolerance),
                        csv_field(&c.detail)
                    )
                })
                .collect();
            csv_document(&echo, "check,passed,value,tolerance,detail", rows)
        }
    };
    Ok(Outcome {
        body,
        messages,
        warnings: vec![],
        success: report.passed,
    })
}
