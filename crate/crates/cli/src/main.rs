#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Parser, Subcommand};
use qpcocycle::arithmetic::beta_upper;
use qpcocycle::conjugacy::{complex_conjugacy, real_conjugacy_with, symmetry_diagnostics};
use qpcocycle::hyperbolicity::{perturbation_certificate, uh_certificate_with};
use qpcocycle::lyapunov::{le_estimate_on, strip_profile_on};
use qpcocycle::schrodinger::{classify_energy, dichotomy_report, ids, rotation_number};
use qpcocycle::{
    ClassifyConfig, Cocycle, ConjugacyConfig, Error, FourierMap, Frequency, FrequencySpec,
    IdsMethod, UhConfig,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const SCHEMA_VERSION: u32 = 1;
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "qpcocycle",
    version,
    about = "Quasiperiodic SL(2) cocycle numerics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Continued-fraction report of the frequency.
    Cf,
    /// Lyapunov exponents on the configured heights.
    Lyap,
    /// Strip profile and slope quantization.
    Accel,
    /// Uniform-hyperbolicity certificates.
    Uh,
    /// Holomorphic conjugacy of the perturbed cocycle to a rotation.
    Conjugate,
    /// Real-symmetric conjugacy.
    RealConjugate,
    /// Integrated density of states on the energy grid.
    Ids,
    /// Classify a single energy.
    Classify,
    /// Classify every energy of the grid.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Cf => "cf",
            Command::Lyap => "lyap",
            Command::Accel => "accel",
            Command::Uh => "uh",
            Command::Conjugate => "conjugate",
            Command::RealConjugate => "real-conjugate",
            Command::Ids => "ids",
            Command::Classify => "classify",
            Command::Report => "report",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialSpec {
    /// Adds `2λ cos 2πx`.
    #[serde(default)]
    lambda: f64,
    #[serde(default)]
    constant: f64,
    /// Coefficients of `cos 2πkx`, `k = 1, 2, …`.
    #[serde(default)]
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
    #[serde(default = "default_strip")]
    strip_radius: f64,
}

fn default_strip() -> f64 {
    0.5
}

impl PotentialSpec {
    fn build(&self) -> FourierMap {
        let mut cos = self.cos.clone();
        if cos.is_empty() {
            cos.push(0.0);
        }
        cos[0] += 2.0 * self.lambda;
        FourierMap::real_trig(self.constant, &cos, &self.sin, self.strip_radius)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnergyGrid {
    min: f64,
    max: f64,
    points: usize,
}

impl EnergyGrid {
    fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        (0..self.points)
            .map(|j| self.min + (self.max - self.min) * j as f64 / (self.points - 1) as f64)
            .collect()
    }
}

fn default_heights() -> Vec<f64> {
    vec![0.0]
}
fn default_grid() -> usize {
    256
}
fn default_tol() -> f64 {
    1e-6
}
fn default_n_max() -> u64 {
    1 << 14
}
fn default_ids_method() -> IdsMethod {
    IdsMethod::Rotation
}
fn default_ids_size() -> usize {
    100_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    schema_version: u32,
    frequency: FrequencySpec,
    #[serde(default)]
    potential: Option<PotentialSpec>,
    #[serde(default)]
    energy: Option<f64>,
    #[serde(default)]
    energies: Option<EnergyGrid>,
    #[serde(default = "default_heights")]
    heights: Vec<f64>,
    #[serde(default)]
    theta: Vec<f64>,
    #[serde(default)]
    eps: Vec<f64>,
    #[serde(default)]
    eps_prime: Vec<f64>,
    /// Grid for exponents and profiles.
    #[serde(default = "default_grid")]
    grid: usize,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_n_max")]
    n_max: u64,
    #[serde(default = "default_ids_method")]
    ids_method: IdsMethod,
    #[serde(default = "default_ids_size")]
    ids_size: usize,
    #[serde(default)]
    uh: UhConfig,
    #[serde(default)]
    conjugacy: ConjugacyConfig,
    #[serde(default)]
    classify: ClassifyConfig,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

enum Failure {
    Invalid(String),
    Verdict(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_verdict() {
            Failure::Verdict(e)
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

fn invalid<T>(msg: impl Into<String>) -> CmdResult<T> {
    Err(Failure::Invalid(msg.into()))
}

impl RunConfig {
    fn validate(&self) -> CmdResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let pow2 = [
            ("grid", self.grid),
            ("uh.grid", self.uh.grid),
            ("conjugacy.grid", self.conjugacy.grid),
            ("classify.grid", self.classify.grid),
            ("classify.uh_grid", self.classify.uh_grid),
        ];
        for (name, n) in pow2 {
            if !n.is_power_of_two() {
                return invalid(format!("{name} = {n} is not a power of two"));
            }
        }
        let tols = [
            ("tol", self.tol),
            ("uh.tol_dir", self.uh.tol_dir),
            ("uh.tol_inv", self.uh.tol_inv),
            ("uh.tol_angle", self.uh.tol_angle),
            ("conjugacy.trim", self.conjugacy.trim),
            ("conjugacy.delta_min", self.conjugacy.delta_min),
            ("conjugacy.tail_tol", self.conjugacy.tail_tol),
            ("conjugacy.residual_tol", self.conjugacy.residual_tol),
            (
                "conjugacy.real_residual_tol",
                self.conjugacy.real_residual_tol,
            ),
            ("conjugacy.rotation_tol", self.conjugacy.rotation_tol),
            (
                "conjugacy.real_rotation_tol",
                self.conjugacy.real_rotation_tol,
            ),
            ("conjugacy.le_tol", self.conjugacy.le_tol),
            ("classify.tol_l", self.classify.tol_l),
            ("classify.delta", self.classify.delta),
            ("classify.slope_tol", self.classify.slope_tol),
            ("classify.le_tol", self.classify.le_tol),
        ];
        for (name, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} = {v} must be positive"));
            }
        }
        if let Some(g) = &self.energies {
            if g.points == 0 || !(g.min <= g.max) {
                return invalid("energies needs points ≥ 1 and min ≤ max");
            }
        }
        if let Some(p) = &self.potential {
            if !(p.strip_radius > 0.0) {
                return invalid("potential.strip_radius must be positive");
            }
        }
        Ok(())
    }

    fn frequency(&self) -> CmdResult<Frequency> {
        Ok(self.frequency.build()?)
    }

    fn potential(&self) -> CmdResult<FourierMap> {
        match &self.potential {
            Some(p) => Ok(p.build()),
            None => invalid("this command needs a potential"),
        }
    }

    fn energy(&self) -> CmdResult<f64> {
        self.energy
            .ok_or_else(|| Failure::Invalid("this command needs `energy`".into()))
    }

    fn energies(&self) -> CmdResult<Vec<f64>> {
        match (&self.energies, self.energy) {
            (Some(g), _) => Ok(g.values()),
            (None, Some(e)) => Ok(vec![e]),
            (None, None) => invalid("this command needs `energies` or `energy`"),
        }
    }

    fn cocycle(&self) -> CmdResult<Cocycle> {
        Ok(Cocycle::schrodinger(
            self.frequency()?,
            self.energy()?,
            &self.potential()?,
        )?)
    }

    fn ladder(&self, name: &str, values: &[f64]) -> CmdResult<Vec<f64>> {
        if values.is_empty() {
            return invalid(format!("this command needs a nonempty `{name}` list"));
        }
        Ok(values.to_vec())
    }
}

/// JSON payload and CSV body produced by a command.
struct Output {
    json: Value,
    csv: String,
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn cmd_cf(cfg: &RunConfig) -> CmdResult<Output> {
    let f = cfg.frequency()?;
    let mut csv = String::from("n,a_n,p_n,q_n\n");
    let mut conv = Vec::new();
    for (n, (p, q)) in f.convergents().iter().enumerate() {
        let a = &f.partial_quotients()[n];
        let _ = writeln!(csv, "{n},{a},{p},{q}");
        conv.push(json!({"n": n, "a": a.to_string(), "p": p.to_string(), "q": q.to_string()}));
    }
    let beta = f
        .depth()
        .checked_sub(2)
        .and_then(|hi| beta_upper(&f, 1..=hi).ok());
    Ok(Output {
        json: json!({
            "label": f.label(),
            "alpha": f.alpha(),
            "rational": f.is_rational(),
            "depth": f.depth(),
            "beta_upper": beta,
            "convergents": conv,
        }),
        csv,
    })
}

fn cmd_lyap(cfg: &RunConfig) -> CmdResult<Output> {
    let c = cfg.cocycle()?;
    let mut csv = String::from("t,N,L_N\n");
    let mut estimates = Vec::new();
    for &t in &cfg.heights {
        let e = le_estimate_on(&c, t, cfg.tol, cfg.n_max, cfg.grid)?;
        for (n, l) in &e.sequence {
            let _ = writeln!(csv, "{t},{n},{}", num(*l));
        }
        estimates.push(e);
    }
    Ok(Output {
        json: json!({ "estimates": estimates }),
        csv,
    })
}

fn cmd_accel(cfg: &RunConfig) -> CmdResult<Output> {
    let c = cfg.cocycle()?;
    let p = strip_profile_on(&c, &cfg.heights, cfg.tol, cfg.n_max, cfg.grid)?;
    let nearest: Vec<f64> = p.slopes.iter().map(|s| s.round()).collect();
    let defect = p
        .slopes
        .iter()
        .map(|s| (s - s.round()).abs())
        .fold(0.0, f64::max);
    Ok(Output {
        json: json!({
            "profile": p,
            "nearest_integers": nearest,
            "quantization_defect": defect,
        }),
        csv: p.to_csv(),
    })
}

fn cmd_uh(cfg: &RunConfig) -> CmdResult<Output> {
    let c = cfg.cocycle()?;
    let mut csv = String::from("theta,t,verdict,margin,residual_u,residual_s,disk_bound,n\n");
    let mut certs = Vec::new();
    let mut row = |theta: Option<f64>, cert: &qpcocycle::UhCertificate| {
        let th = theta.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{th},{},{},{},{},{},{},{}",
            cert.t,
            cert.verdict,
            num(cert.margin),
            num(cert.residual_u),
            num(cert.residual_s),
            num(cert.disk_bound),
            cert.n
        );
    };
    for &t in &cfg.heights {
        let cert = uh_certificate_with(&c, t, &cfg.uh);
        row(None, &cert);
        certs.push(json!({"theta": null, "certificate": cert}));
    }
    for &theta in &cfg.theta {
        let cert = perturbation_certificate(&c, theta, &cfg.uh);
        row(Some(theta), &cert);
        certs.push(json!({"theta": theta, "certificate": cert}));
    }
    Ok(Output {
        json: json!({ "certificates": certs }),
        csv,
    })
}

const CONJUGACY_COLUMNS: &str =
    "theta,eps,eps_prime,winding,lambda_re,lambda_im,residual,norm_budget,norm_exponent,kappa,branch,real_axis_defect\n";

fn conjugacy_row(
    csv: &mut String,
    r: &qpcocycle::ConjugacyResult,
    eps: f64,
    eps_prime: Option<f64>,
) {
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.theta,
        eps,
        eps_prime.map(|v| v.to_string()).unwrap_or_default(),
        r.winding,
        num(r.lambda.re),
        num(r.lambda.im),
        num(r.residual),
        num(r.norm_budget),
        num(r.norm_exponent),
        num(r.kappa),
        r.branch
            .map(|b| serde_json::to_value(b)
                .unwrap()
                .as_str()
                .unwrap_or("")
                .to_string())
            .unwrap_or_default(),
        r.real_axis_defect.map(num).unwrap_or_default(),
    );
}

fn cmd_conjugate(cfg: &RunConfig) -> CmdResult<Output> {
    let c = cfg.cocycle()?;
    let mut csv = String::from(CONJUGACY_COLUMNS);
    let mut runs = Vec::new();
    for &theta in &cfg.ladder("theta", &cfg.theta)? {
        for &eps in &cfg.ladder("eps", &cfg.eps)? {
            let r = complex_conjugacy(&c, theta, eps, &cfg.conjugacy)?;
            conjugacy_row(&mut csv, &r, eps, None);
            let diag = symmetry_diagnostics(&r, cfg.conjugacy.grid);
            runs.push(json!({"result": r, "symmetry": diag}));
        }
    }
    Ok(Output {
        json: json!({ "runs": runs }),
        csv,
    })
}

fn cmd_real_conjugate(cfg: &RunConfig) -> CmdResult<Output> {
    let c = cfg.cocycle()?;
    let mut csv = String::from(CONJUGACY_COLUMNS);
    let mut runs = Vec::new();
    for &theta in &cfg.ladder("theta", &cfg.theta)? {
        for &eps in &cfg.ladder("eps", &cfg.eps)? {
            let complex = complex_conjugacy(&c, theta, eps, &cfg.conjugacy)?;
            for &ep in &cfg.ladder("eps_prime", &cfg.eps_prime)? {
                let r = real_conjugacy_with(&c, &complex, ep, &cfg.conjugacy)?;
                conjugacy_row(&mut csv, &r, eps, Some(ep));
                runs.push(json!({"eps_prime": ep, "result": r}));
            }
        }
    }
    Ok(Output {
        json: json!({ "runs": runs }),
        csv,
    })
}

fn cmd_ids(cfg: &RunConfig) -> CmdResult<Output> {
    let f = cfg.frequency()?;
    let v = cfg.potential()?;
    let mut csv = String::from("E,ids,rho,rho_err\n");
    let mut rows = Vec::new();
    for e in cfg.energies()? {
        let n = ids(&f, &v, e, cfg.ids_method, cfg.ids_size)?;
        let r = rotation_number(&f, &v, e, cfg.classify.rotation_steps)?;
        let _ = writeln!(csv, "{e},{},{},{}", num(n), num(r.rho), num(r.err));
        rows.push(json!({"E": e, "ids": n, "rho": r.rho, "rho_err": r.err}));
    }
    Ok(Output {
        json: json!({ "method": cfg.ids_method, "size": cfg.ids_size, "values": rows }),
        csv,
    })
}

fn cmd_classify(cfg: &RunConfig) -> CmdResult<Output> {
    let f = cfg.frequency()?;
    let v = cfg.potential()?;
    let r = classify_energy(&f, &v, cfg.energy()?, &cfg.classify)?;
    let rep = qpcocycle::DichotomyReport {
        config: cfg.classify.clone(),
        summary: qpcocycle::schrodinger::summarize(std::slice::from_ref(&r)),
        records: vec![r.clone()],
    };
    Ok(Output {
        json: json!({ "record": r, "profile": r.profile }),
        csv: rep.to_csv(),
    })
}

fn cmd_report(cfg: &RunConfig) -> CmdResult<Output> {
    let f = cfg.frequency()?;
    let v = cfg.potential()?;
    let rep = dichotomy_report(&f, &v, &cfg.energies()?, &cfg.classify)?;
    Ok(Output {
        csv: rep.to_csv(),
        json: serde_json::to_value(&rep).map_err(|e| Failure::Invalid(e.to_string()))?,
    })
}

fn load(path: &Path) -> CmdResult<(RunConfig, Value)> {
    let text = std::fs::read_to_string(path)
        .or_else(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let raw: Value =
        serde_json::from_str(&text).or_else(|e| invalid(format!("config is not JSON: {e}")))?;
    // Check the version before the schema so old configs get a clear message.
    match raw.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return invalid(format!(
                "schema_version {v} is not supported (expected {SCHEMA_VERSION})"
            ))
        }
        None => return invalid("config lacks an integer schema_version"),
    }
    let cfg: RunConfig =
        serde_json::from_value(raw).or_else(|e| invalid(format!("invalid config: {e}")))?;
    cfg.validate()?;
    // Echo the config with defaults filled in; its hash identifies the run.
    let echo = serde_json::to_value(&cfg).or_else(|e| invalid(e.to_string()))?;
    Ok((cfg, echo))
}

fn run(cli: &Cli) -> CmdResult<PathBuf> {
    let Some(path) = &cli.config else {
        return invalid("--config is required");
    };
    let (cfg, echo) = load(path)?;
    let canonical = serde_json::to_vec(&echo).or_else(|e| invalid(e.to_string()))?;
    let hash = hex::encode(Sha256::digest(&canonical));
    let out = match command_output(cli.command, &cfg) {
        Ok(o) => o,
        Err(Failure::Verdict(e)) => {
            let msg = json!({
                "tool": "qpcocycle",
                "version": VERSION,
                "config_sha256": hash,
                "command": cli.command.name(),
                "verdict": e.kind(),
                "message": e.to_string(),
            });
            println!("{}", serde_json::to_string_pretty(&msg).unwrap());
            return Err(Failure::Verdict(e));
        }
        Err(e) => return Err(e),
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .or_else(|e| invalid(format!("cannot create {}: {e}", dir.display())))?;
    let name = cli.command.name();
    let doc = json!({
        "tool": "qpcocycle",
        "version": VERSION,
        "config_sha256": hash,
        "command": name,
        "config": echo,
        "result": out.json,
    });
    let mut text = serde_json::to_string_pretty(&doc).or_else(|e| invalid(e.to_string()))?;
    text.push('\n');
    let header = format!("# qpcocycle {VERSION} config_sha256={hash}\n");
    write(&dir.join(format!("{name}.json")), &text)?;
    write(&dir.join(format!("{name}.csv")), &(header + &out.csv))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> CmdResult<()> {
    std::fs::write(path, text).or_else(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

fn command_output(cmd: Command, cfg: &RunConfig) -> CmdResult<Output> {
    match cmd {
        Command::Cf => cmd_cf(cfg),
        Command::Lyap => cmd_lyap(cfg),
        Command::Accel => cmd_accel(cfg),
        Command::Uh => cmd_uh(cfg),
        Command::Conjugate => cmd_conjugate(cfg),
        Command::RealConjugate => cmd_real_conjugate(cfg),
        Command::Ids => cmd_ids(cfg),
        Command::Classify => cmd_classify(cfg),
        Command::Report => cmd_report(cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(dir) => {
            eprintln!(
                "wrote {}/{}.{{json,csv}}",
                dir.display(),
                cli.command.name()
            );
            ExitCode::SUCCESS
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verdict(e)) => {
            eprintln!("verdict: {e}");
            ExitCode::from(2)
        }
    }
}
