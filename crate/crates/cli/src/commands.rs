//! Subcommand definitions and their implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use redundancy_core::discrete::{
    entropy, i_min_discrete, mss_redundancy, pairwise_min_mi, TripleExample,
};
use redundancy_core::gauss::{
    region_label, te_phi_to_x, te_phi_to_z, te_x_to_z, Eq10Variant, Lemma2Params,
};
use redundancy_core::linsim::DEFAULT_BURN_IN;
use redundancy_core::{
    run_pipeline, simulate_benchmark, simulate_lag_network, te_matrix, EmbeddingSpec,
    LagCouplingSpec, LinSysParams, ProcessId, SelectionConfig, TimeSeriesPanel,
};
use serde::Serialize;

use crate::bundle::{emit_plot_data, save_reports_json, MatrixRecord, Provenance, ReportBundle};
use crate::error::{CliError, CliResult};
use crate::io::{
    load_panel_csv, save_panel_csv, save_raw_te_matrix_csv, save_te_matrix_csv, write_json,
};

pub const PANEL_FILE: &str = "panel.csv";
pub const PROVENANCE_FILE: &str = "provenance.json";
pub const TE_MATRIX_FILE: &str = "te_matrix.csv";
pub const TE_MATRIX_RAW_FILE: &str = "te_matrix_raw.csv";
pub const TE_MATRIX_JSON_FILE: &str = "te_matrix.json";
pub const REPORTS_FILE: &str = "reports.json";
pub const TE_SOURCES_FILE: &str = "te_among_sources.csv";
pub const TE_TARGETS_FILE: &str = "te_to_targets.csv";
pub const CLOSED_FORM_FILE: &str = "closed_form.csv";
pub const DISCRETE_DEMO_FILE: &str = "discrete_demo.json";

#[derive(Debug, Parser)]
#[command(
    name = "redundancy",
    version,
    about = "Directed redundancy analysis for multichannel time series"
)]
pub struct Cli {
    /// Worker threads for estimation (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the five-process benchmark network or a lag-coupled network
    /// into a panel CSV.
    Simulate(SimulateArgs),
    /// Estimate the source-by-target transfer entropy matrix of a panel.
    TeMatrix(TeMatrixArgs),
    /// Select hidden redundancy processes and bound the redundancy per target.
    Select(SelectArgs),
    /// Evaluate the closed-form transfer entropies over parameter grids.
    ClosedForm(ClosedFormArgs),
    /// Print the three-fair-bits redundancy example.
    DiscreteDemo(DiscreteDemoArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// JSON lag-network description; the benchmark network is used when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0.2)]
    pub b: f64,
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub d: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub e: f64,
    /// Noise standard deviations for psi, phi, X, Y, Z.
    #[arg(long, value_delimiter = ',', num_args = 5)]
    pub noise_std: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5000)]
    pub length: usize,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct EstimationArgs {
    /// Panel CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// Target channel labels (default: all channels).
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    /// Source channel labels (default: all channels).
    #[arg(long, value_delimiter = ',')]
    pub sources: Option<Vec<String>>,
    #[arg(long, default_value_t = 5)]
    pub max_lag: usize,
    #[arg(long, default_value_t = 10)]
    pub knn: usize,
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
    /// Relative amplitude of the tie-breaking noise.
    #[arg(long, default_value_t = 1e-8)]
    pub jitter: f64,
    /// Seed of the tie-breaking noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl EstimationArgs {
    fn embedding(&self) -> EmbeddingSpec {
        EmbeddingSpec {
            max_lag: self.max_lag,
            horizon: self.horizon,
            k_neighbors: self.knn,
            jitter_amplitude: self.jitter,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TeMatrixArgs {
    #[command(flatten)]
    pub estimation: EstimationArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub estimation: EstimationArgs,
    #[arg(long, default_value_t = 0.8)]
    pub eta_t: f64,
    #[arg(long, default_value_t = 0.8)]
    pub eta_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Printed,
    Rederived,
}

impl From<VariantArg> for Eq10Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Printed => Eq10Variant::Printed,
            VariantArg::Rederived => Eq10Variant::Rederived,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClosedFormArgs {
    /// Output directory; the table goes to standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub c: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub d: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub e: Vec<f64>,
    /// Stationary variance of phi.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub sigma_phi_sq: Vec<f64>,
    /// Denominator form of the X -> Z closed form.
    #[arg(long, value_enum, default_value_t = VariantArg::Rederived)]
    pub variant: VariantArg,
}

#[derive(Debug, Clone, Args)]
pub struct DiscreteDemoArgs {
    /// Also write the values as JSON into this directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn std::io::Write) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        // Fails only if a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match &cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::TeMatrix(a) => te_matrix_cmd(a, out),
        Command::Select(a) => select(a, out),
        Command::ClosedForm(a) => closed_form(a, out),
        Command::DiscreteDemo(a) => discrete_demo(a, out),
    }
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn say(out: &mut dyn std::io::Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))
}

#[derive(Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
enum SimulationEcho<'a> {
    Benchmark(&'a LinSysParams),
    LagNetwork {
        spec_file: &'a Path,
        spec: &'a LagCouplingSpec,
    },
}

fn simulate(a: &SimulateArgs, out: &mut dyn std::io::Write) -> CliResult<()> {
    create_dir(&a.output)?;
    let (panel, provenance) = match &a.spec {
        Some(spec_path) => {
            let text = fs::read_to_string(spec_path).map_err(|e| CliError::io(spec_path, e))?;
            let spec: LagCouplingSpec =
                serde_json::from_str(&text).map_err(|e| CliError::json(spec_path, e))?;
            let panel = simulate_lag_network(&spec)?;
            let echo = SimulationEcho::LagNetwork {
                spec_file: spec_path,
                spec: &spec,
            };
            (
                panel,
                Provenance::new("simulate", Some(spec.seed), &echo, &a.output),
            )
        }
        None => {
            let mut p = LinSysParams::new(a.a, a.b, a.c, a.d, a.e, a.length, a.seed);
            p.burn_in = a.burn_in;
            if let Some(sd) = &a.noise_std {
                p.noise_std.copy_from_slice(sd);
            }
            let panel = simulate_benchmark(&p)?;
            let provenance = Provenance::new(
                "simulate",
                Some(a.seed),
                &SimulationEcho::Benchmark(&p),
                &a.output,
            );
            (panel, provenance)
        }
    };
    let panel_path = a.output.join(PANEL_FILE);
    save_panel_csv(&panel, &panel_path)?;
    write_json(&provenance, &a.output.join(PROVENANCE_FILE))?;
    say(
        out,
        &format!(
            "wrote {} channels x {} samples to {}\n",
            panel.channel_count(),
            panel.sample_count(),
            panel_path.display()
        ),
    )
}

/// Resolves labels to process ids; `None` selects every channel.
fn resolve(
    panel: &TimeSeriesPanel,
    labels: Option<&[String]>,
    what: &str,
) -> CliResult<Vec<ProcessId>> {
    match labels {
        None => Ok((0..panel.channel_count()).map(ProcessId).collect()),
        Some(list) => {
            if list.is_empty() {
                return Err(CliError::usage(format!(
                    "--{what} must name at least one channel"
                )));
            }
            list.iter()
                .map(|l| {
                    panel.process_by_label(l).ok_or_else(|| {
                        CliError::usage(format!("--{what}: no channel labeled {l:?} in the panel"))
                    })
                })
                .collect()
        }
    }
}

fn labels_of(panel: &TimeSeriesPanel, ids: &[ProcessId]) -> Vec<String> {
    ids.iter().map(|&id| panel.label(id).to_string()).collect()
}

#[derive(Serialize)]
struct EstimationEcho<'a> {
    input: &'a Path,
    sources: Vec<String>,
    targets: Vec<String>,
    embedding: EmbeddingSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<SelectionConfig>,
}

#[derive(Serialize)]
struct MatrixOutput {
    provenance: Provenance,
    matrix: MatrixRecord,
}

fn te_matrix_cmd(a: &TeMatrixArgs, out: &mut dyn std::io::Write) -> CliResult<()> {
    let est = &a.estimation;
    let embedding = est.embedding();
    embedding.validate()?;
    let panel = load_panel_csv(&est.input)?;
    let sources = resolve(&panel, est.sources.as_deref(), "sources")?;
    let targets = resolve(&panel, est.targets.as_deref(), "targets")?;
    create_dir(&est.output)?;
    let echo = EstimationEcho {
        input: &est.input,
        sources: labels_of(&panel, &sources),
        targets: labels_of(&panel, &targets),
        embedding: embedding.clone(),
        selection: None,
    };
    let provenance = Provenance::new("te-matrix", Some(embedding.seed), &echo, &est.output);
    let m = te_matrix(&panel, &sources, &targets, &embedding)?;
    save_te_matrix_csv(&m, panel.labels(), &est.output.join(TE_MATRIX_FILE))?;
    save_raw_te_matrix_csv(&m, panel.labels(), &est.output.join(TE_MATRIX_RAW_FILE))?;
    write_json(
        &MatrixOutput {
            provenance,
            matrix: MatrixRecord::from_matrix(&m, panel.labels()),
        },
        &est.output.join(TE_MATRIX_JSON_FILE),
    )?;
    say(
        out,
        &format!(
            "wrote {} x {} matrix to {}\n",
            sources.len(),
            targets.len(),
            est.output.display()
        ),
    )
}

fn select(a: &SelectArgs, out: &mut dyn std::io::Write) -> CliResult<()> {
    let est = &a.estimation;
    let embedding = est.embedding();
    let cfg = SelectionConfig {
        eta_t: a.eta_t,
        eta_h: a.eta_h,
    };
    embedding.validate()?;
    cfg.validate()?;
    let panel = load_panel_csv(&est.input)?;
    let sources = resolve(&panel, est.sources.as_deref(), "sources")?;
    let targets = resolve(&panel, est.targets.as_deref(), "targets")?;
    create_dir(&est.output)?;
    let echo = EstimationEcho {
        input: &est.input,
        sources: labels_of(&panel, &sources),
        targets: labels_of(&panel, &targets),
        embedding: embedding.clone(),
        selection: Some(cfg),
    };
    let provenance = Provenance::new("select", Some(embedding.seed), &echo, &est.output);
    let result = run_pipeline(&panel, &targets, &sources, &embedding, &cfg)?;
    let bundle = ReportBundle::new(provenance, &result, panel.labels());
    save_reports_json(&bundle, &est.output.join(REPORTS_FILE))?;
    save_te_matrix_csv(
        &result.te_among_sources,
        panel.labels(),
        &est.output.join(TE_SOURCES_FILE),
    )?;
    save_te_matrix_csv(
        &result.te_to_targets,
        panel.labels(),
        &est.output.join(TE_TARGETS_FILE),
    )?;
    emit_plot_data(&bundle, &est.output)?;

    let mut text = String::new();
    for r in &bundle.reports {
        let _ = writeln!(
            text,
            "{}: hidden {} relevant [{}] bound {:.4}{}",
            r.target,
            r.hidden,
            r.relevant.join(", "),
            r.bound,
            if r.degenerate_flags.is_empty() {
                String::new()
            } else {
                format!(" ({})", r.degenerate_flags.join(", "))
            }
        );
    }
    say(out, &text)
}

pub const CLOSED_FORM_HEADER: [&str; 11] = [
    "c",
    "d",
    "e",
    "sigma_phi_sq",
    "variant",
    "te_phi_to_x",
    "te_phi_to_z",
    "te_x_to_z",
    "minimum",
    "argmin",
    "region",
];

fn closed_form(a: &ClosedFormArgs, out: &mut dyn std::io::Write) -> CliResult<()> {
    for (name, values) in [
        ("c", &a.c),
        ("d", &a.d),
        ("e", &a.e),
        ("sigma-phi-sq", &a.sigma_phi_sq),
    ] {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::usage(format!("--{name} values must be finite")));
        }
    }
    if a.sigma_phi_sq.iter().any(|&s| s <= 0.0) {
        return Err(CliError::usage("--sigma-phi-sq values must be positive"));
    }
    let variant: Eq10Variant = a.variant.into();
    let variant_name = match a.variant {
        VariantArg::Printed => "printed",
        VariantArg::Rederived => "rederived",
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e| CliError::csv("<closed-form>", e);
    w.write_record(CLOSED_FORM_HEADER).map_err(csv_err)?;
    for &c in &a.c {
        for &d in &a.d {
            for &e in &a.e {
                for &s in &a.sigma_phi_sq {
                    let p = Lemma2Params::new(c, d, e, s).with_variant(variant);
                    let terms = [
                        ("phi_to_x", te_phi_to_x(&p)),
                        ("phi_to_z", te_phi_to_z(&p)),
                        ("x_to_z", te_x_to_z(&p)),
                    ];
                    // Ties resolve in the order phi->Z, phi->X, X->Z.
                    let (argmin, minimum) = [terms[1], terms[0], terms[2]]
                        .into_iter()
                        .fold(terms[1], |best, t| if t.1 < best.1 { t } else { best });
                    // The stated case split only covers c = d, e = 1.
                    let region = if c == d && e == 1.0 {
                        region_label(c, s).map_or("", |r| r.label.as_str())
                    } else {
                        ""
                    };
                    w.write_record([
                        c.to_string(),
                        d.to_string(),
                        e.to_string(),
                        s.to_string(),
                        variant_name.to_string(),
                        terms[0].1.to_string(),
                        terms[1].1.to_string(),
                        terms[2].1.to_string(),
                        minimum.to_string(),
                        argmin.to_string(),
                        region.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
    }
    let table = w
        .into_inner()
        .map_err(|e| CliError::io("<closed-form>", e.into_error()))?;
    match &a.output {
        Some(dir) => {
            create_dir(dir)?;
            let path = dir.join(CLOSED_FORM_FILE);
            fs::write(&path, &table).map_err(|e| CliError::io(&path, e))?;
            #[derive(Serialize)]
            struct Echo<'a> {
                c: &'a [f64],
                d: &'a [f64],
                e: &'a [f64],
                sigma_phi_sq: &'a [f64],
                variant: Eq10Variant,
            }
            let echo = Echo {
                c: &a.c,
                d: &a.d,
                e: &a.e,
                sigma_phi_sq: &a.sigma_phi_sq,
                variant,
            };
            write_json(
                &Provenance::new("closed-form", None, &echo, dir),
                &dir.join(PROVENANCE_FILE),
            )?;
            say(out, &format!("wrote {}\n", path.display()))
        }
        None => out
            .write_all(&table)
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDemo {
    pub entropy_a: f64,
    pub mi_xy: f64,
    pub mi_xz: f64,
    pub mi_yz: f64,
    pub pairwise_min_mi: f64,
    pub mss_redundancy: f64,
    pub i_min_z: f64,
}

/// Values of the three-fair-bits example with `X = (A, B)`, `Y = (A, C)`,
/// `Z = (B, C)`.
pub fn discrete_demo_values() -> CliResult<DiscreteDemo> {
    let t = TripleExample::fair_bits();
    let [mi_xy, mi_xz, mi_yz] = t.pairwise_mi()?;
    Ok(DiscreteDemo {
        entropy_a: entropy(&t.pmf_a),
        mi_xy,
        mi_xz,
        mi_yz,
        pairwise_min_mi: pairwise_min_mi(&t)?,
        mss_redundancy: mss_redundancy(&t)?,
        i_min_z: i_min_discrete(&t.composite_joint()?)?,
    })
}

fn discrete_demo(a: &DiscreteDemoArgs, out: &mut dyn std::io::Write) -> CliResult<()> {
    let v = discrete_demo_values()?;
    let text = format!(
        "A, B, C independent fair bits; X = (A, B), Y = (A, C), Z = (B, C)\n\
         H(A)                      = {:.6} bits\n\
         I(X;Y)                    = {:.6} bits\n\
         I(X;Z)                    = {:.6} bits\n\
         I(Y;Z)                    = {:.6} bits\n\
         minimum pairwise MI       = {:.6} bits\n\
         redundancy via sufficient statistics = {:.6} bits\n\
         I_min(X, Y -> Z)          = {:.6} bits\n",
        v.entropy_a, v.mi_xy, v.mi_xz, v.mi_yz, v.pairwise_min_mi, v.mss_redundancy, v.i_min_z
    );
    say(out, &text)?;
    if let Some(dir) = &a.output {
        create_dir(dir)?;
        #[derive(Serialize)]
        struct Output<'a> {
            provenance: Provenance,
            values: &'a DiscreteDemo,
        }
        let provenance = Provenance::new("discrete-demo", None, &serde_json::json!({}), dir);
        write_json(
            &Output {
                provenance,
                values: &v,
            },
            &dir.join(DISCRETE_DEMO_FILE),
        )?;
    }
    Ok(())
}
