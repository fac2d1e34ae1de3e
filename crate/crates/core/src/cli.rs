//! Command-line front end. Every command writes its results, a `config.json`
//! echo of the resolved arguments and a `manifest.json` into `--out`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::basis::{build_graph, product_state, Boundary, ConstrainedBasis, Pattern};
use crate::dynamics::{self, AnalysisOptions, Method, QuenchOptions, QuenchRun, TimeGrid};
use crate::error::Error;
use crate::fsa::{compare_to_exact, run_fsa};
use crate::hamiltonian::{assemble, assemble_full, OperatorKind, OperatorMatrix, OperatorSpec, SparseMatrix, SparseOperator};
use crate::io::{write_json, Cell, CsvWriter};
use crate::scars::{analyze_band, pr2_enhancement, write_scatter, BandAnalysis};
use crate::spectral::levels::{goe_control, poisson_control, Reference, DEFAULT_UNFOLD_DEGREE};
use crate::spectral::{
    dense_cap, density_of_states, diagonalize, diagonalize_operator, level_statistics, standard_window, zero_modes,
    LevelStatistics, ZeroModeOptions,
};
use crate::symmetry::{Block, BlockLabel, Parity};

/// Largest sizes accepted by `reproduce`.
pub const FIG2_MAX_L: usize = 24;
pub const FIG3_EXACT_MAX_L: usize = 24;
pub const FIG3_FSA_MAX_L: usize = 32;
pub const FIG3D_MIN_L: usize = 12;
pub const FIG4_MAX_L: usize = 28;

/// Dimensions up to which `--method auto` picks the spectral propagator.
const AUTO_SPECTRAL_PBC: usize = 40_000;
const AUTO_SPECTRAL_OBC: usize = 5_000;

const DEFAULT_SEED: u64 = 7;
const GOE_CONTROL_DIM: usize = 200;
const GOE_CONTROL_SAMPLES: usize = 20;

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "scarlab", version, about = "Exact numerics for the constrained PXP chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// List the constrained basis (one `o`/`x` string per line).
    Basis(Common),
    /// Export the Hilbert-space graph as an edge list (and optionally DOT).
    Graph {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dot: bool,
    },
    /// Diagonalize a sector (or the full basis) densely.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        stagger: f64,
        /// Also report |<Z2|E>|^2 and PR2 per eigenstate.
        #[arg(long)]
        observables: bool,
        /// Export the matrix as "row col value" triplets.
        #[arg(long)]
        matrix: bool,
        #[arg(long, default_value_t = 60)]
        bins: usize,
    },
    /// Level-spacing statistics of a sector, or of a seeded synthetic control.
    Levelstats {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_UNFOLD_DEGREE)]
        degree: usize,
        #[arg(long, value_enum)]
        control: Option<Control>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Overlap scatter with |Z2> and the special band.
    Scars(Common),
    /// Forward scattering approximation from |Z2>.
    Fsa {
        #[command(flatten)]
        common: Common,
        /// Compare with the exact band states (periodic L <= 24).
        #[arg(long)]
        compare: bool,
    },
    /// Quench a product state and record fidelity, correlator and entropy.
    Dynamics {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        quench: QuenchArgs,
        /// Initial product state: z2, z2p, z3, z4, ..., zero.
        #[arg(long, default_value = "z2")]
        state: String,
        /// Bond for the entropy (default L/2).
        #[arg(long)]
        cut: Option<usize>,
        #[arg(long)]
        skip_analysis: bool,
    },
    /// Count E = 0 eigenstates, optionally in exact arithmetic.
    Zeromodes {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        stagger: f64,
        #[arg(long)]
        exact: bool,
        /// Return a primitive integer basis of the kernel (implies --exact).
        #[arg(long)]
        integer_basis: bool,
        #[arg(long)]
        skip_numerical: bool,
    },
    /// Produce the data behind one figure.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
        #[arg(short = 'L', long)]
        length: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        quench: QuenchArgs,
        /// Upper end of the window for the entropy slopes in fig2.
        #[arg(long, default_value_t = 6.0)]
        slope_window: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    #[arg(short = 'L', long)]
    pub length: usize,
    #[arg(long, default_value = "pbc")]
    pub bc: Boundary,
    #[arg(long)]
    pub momentum: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub inversion: Option<Parity>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct QuenchArgs {
    #[arg(long, default_value_t = 30.0)]
    pub tmax: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[arg(long, default_value_t = dynamics::krylov::DEFAULT_KRYLOV_DIM)]
    pub krylov_dim: usize,
    /// Fit window for the entropy slope (default: the whole run).
    #[arg(long)]
    pub fit_start: Option<f64>,
    #[arg(long)]
    pub fit_stop: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    Poisson,
    Goe,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Auto,
    Spectral,
    Krylov,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3a,
    Fig3bc,
    Fig3d,
    Fig4,
}

/// Resolved configuration written as `config.json`.
#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'a Command,
    dense_cap: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'static str,
    version: &'static str,
    modules: Vec<(&'static str, &'static str)>,
    created_unix_seconds: u64,
    files: &'a [String],
    config: &'a RunConfig<'a>,
}

const MODULES: [&str; 8] = ["basis", "symmetry", "hamiltonian", "spectral", "fsa", "scars", "dynamics", "cli"];

/// Collects the files written into one output directory.
struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let path = self.path(name);
        write_json(&path, value).with_context(|| format!("writing {}", path.display()))
    }

    fn csv(&mut self, name: &str, header: &[&str]) -> anyhow::Result<CsvWriter<BufWriter<File>>> {
        let path = self.path(name);
        CsvWriter::create(&path, header).with_context(|| format!("writing {}", path.display()))
    }

    fn text(&mut self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.path(name);
        Ok(BufWriter::new(File::create(&path).with_context(|| format!("writing {}", path.display()))?))
    }

    fn finish(mut self, command: &Command) -> anyhow::Result<Vec<String>> {
        let config = RunConfig { command, dense_cap: dense_cap() };
        self.json("config.json", &config)?;
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut files = self.files.clone();
        files.push("manifest.json".into());
        let manifest = Manifest {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            modules: MODULES.iter().map(|m| (*m, env!("CARGO_PKG_VERSION"))).collect(),
            created_unix_seconds: created,
            files: &files,
            config: &config,
        };
        write_json(&self.dir.join("manifest.json"), &manifest)?;
        Ok(files)
    }
}

/// Maps an error chain onto the documented exit codes.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    err.chain().find_map(|e| e.downcast_ref::<Error>()).map_or(1, Error::exit_code)
}

/// Parses `argv` and runs the command; returns the files written.
pub fn run<I, T>(argv: I) -> anyhow::Result<Vec<String>>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    execute(&cli.command)
}

pub fn execute(command: &Command) -> anyhow::Result<Vec<String>> {
    let out_dir = match command {
        Command::Basis(c) | Command::Scars(c) => &c.out,
        Command::Graph { common, .. }
        | Command::Spectrum { common, .. }
        | Command::Levelstats { common, .. }
        | Command::Fsa { common, .. }
        | Command::Dynamics { common, .. }
        | Command::Zeromodes { common, .. } => &common.out,
        Command::Reproduce { out, .. } => out,
    };
    let mut out = Output::new(out_dir)?;
    match command {
        Command::Basis(c) => cmd_basis(c, &mut out)?,
        Command::Graph { common, dot } => cmd_graph(common, *dot, &mut out)?,
        Command::Spectrum { common, stagger, observables, matrix, bins } => {
            cmd_spectrum(common, *stagger, *observables, *matrix, *bins, &mut out)?
        }
        Command::Levelstats { common, degree, control, seed } => cmd_levelstats(common, *degree, *control, *seed, &mut out)?,
        Command::Scars(c) => cmd_scars(c, &mut out)?,
        Command::Fsa { common, compare } => cmd_fsa(common, *compare, &mut out)?,
        Command::Dynamics { common, quench, state, cut, skip_analysis } => {
            cmd_dynamics(common, quench, state, *cut, *skip_analysis, &mut out)?
        }
        Command::Zeromodes { common, stagger, exact, integer_basis, skip_numerical } => {
            let options = ZeroModeOptions {
                exact: *exact || *integer_basis,
                integer_basis: *integer_basis,
                stagger: *stagger,
                skip_numerical: *skip_numerical,
            };
            let report = zero_modes(common.length, common.bc, options)?;
            out.json("zeromodes.json", &report)?;
        }
        Command::Reproduce { figure, length, quench, slope_window, seed, .. } => match figure {
            Figure::Fig2 => fig2(*length, quench, *slope_window, &mut out)?,
            Figure::Fig3a => fig3a(*length, &mut out)?,
            Figure::Fig3bc => fig3bc(*length, &mut out)?,
            Figure::Fig3d => fig3d(*length, &mut out)?,
            Figure::Fig4 => fig4(*length, *seed, &mut out)?,
        },
    }
    out.finish(command)
}

fn basis_of(c: &Common) -> anyhow::Result<Arc<ConstrainedBasis>> {
    Ok(Arc::new(ConstrainedBasis::enumerate(c.length, c.bc)?))
}

/// The block selected by `--momentum/--inversion`, or the full basis.
fn block_of(c: &Common, basis: Arc<ConstrainedBasis>) -> anyhow::Result<Block> {
    match (c.momentum, c.inversion) {
        (None, None) => Ok(Block::full(basis)),
        (None, Some(_)) => Err(Error::invalid("--inversion needs --momentum").into()),
        (Some(k), inversion) => {
            if c.bc != Boundary::Periodic {
                return Err(Error::invalid("momentum sectors need --bc pbc").into());
            }
            Ok(Block::sector(basis, k, inversion)?)
        }
    }
}

fn cmd_basis(c: &Common, out: &mut Output) -> anyhow::Result<()> {
    let basis = basis_of(c)?;
    match c.format {
        Format::Csv => {
            let mut w = out.text("basis.txt")?;
            basis.write_states(&mut w)?;
            w.flush()?;
        }
        Format::Json => {
            let states: Vec<String> = (0..basis.len()).map(|i| basis.state(i).to_string()).collect();
            out.json("basis.json", &states)?;
        }
    }
    if let Block::Sector(s) = block_of(c, basis)? {
        out.json("sector.json", &s.summary())?;
    }
    Ok(())
}

fn cmd_graph(c: &Common, dot: bool, out: &mut Output) -> anyhow::Result<()> {
    let basis = basis_of(c)?;
    let graph = build_graph(&basis);
    let mut w = out.text("graph_edges.txt")?;
    graph.write_edge_list(&mut w)?;
    w.flush()?;
    if dot {
        let mut w = out.text("graph.dot")?;
        graph.write_dot(&basis, &mut w)?;
        w.flush()?;
    }
    #[derive(Serialize)]
    struct GraphSummary {
        nodes: usize,
        edges: usize,
        sublattice_sizes: (usize, usize),
    }
    out.json(
        "graph.json",
        &GraphSummary { nodes: graph.node_count(), edges: graph.edges().len(), sublattice_sizes: graph.sublattice_sizes() },
    )
}

/// `H + stagger * sum_i (-1)^i Z_i` on a block.
fn hamiltonian_with_stagger(block: &Block, stagger: f64) -> anyhow::Result<SparseOperator> {
    if stagger == 0.0 {
        return Ok(assemble(&OperatorSpec::pxp(), block)?);
    }
    let Block::Full(basis) = block else {
        return Err(Error::invalid("the staggered field breaks translation symmetry; drop --momentum").into());
    };
    let h = assemble_full(&OperatorSpec::pxp(), basis)?;
    let d = assemble_full(&OperatorSpec::staggered(stagger), basis)?;
    let triplets = h
        .triplets()
        .into_iter()
        .chain(d.triplets())
        .map(|(r, c, v)| (r as u32, c as u32, v))
        .collect();
    Ok(SparseOperator {
        label: block.label(),
        kind: OperatorKind::Pxp,
        matrix: OperatorMatrix::Real(SparseMatrix::from_triplets(basis.len(), triplets, 0.0)),
    })
}

fn cmd_spectrum(
    c: &Common,
    stagger: f64,
    observables: bool,
    matrix: bool,
    bins: usize,
    out: &mut Output,
) -> anyhow::Result<()> {
    let block = block_of(c, basis_of(c)?)?;
    let op = hamiltonian_with_stagger(&block, stagger)?;
    if matrix {
        let mut w = out.text("matrix.txt")?;
        op.write_coordinates(&mut w)?;
        w.flush()?;
    }
    let spectrum = diagonalize_operator(&block, &op, observables)?;
    let observables = if observables {
        let z2 = product_state(Pattern::Z2, c.length, c.bc)?;
        let reference = block.reference_state(z2)?;
        let overlaps = spectrum.overlaps(&reference)?;
        let pr2 = (0..spectrum.dim()).map(|j| spectrum.participation_ratio(j)).collect::<crate::Result<Vec<_>>>()?;
        Some((overlaps, pr2))
    } else {
        None
    };
    match c.format {
        Format::Csv => {
            let header: &[&str] =
                if observables.is_some() { &["index", "energy", "overlap_z2", "pr2"] } else { &["index", "energy"] };
            let mut csv = out.csv("spectrum.csv", header)?;
            for (i, &e) in spectrum.eigenvalues.iter().enumerate() {
                let mut row = vec![Cell::Int(i as i64), Cell::Float(e)];
                if let Some((o, p)) = &observables {
                    row.extend([Cell::Float(o[i]), Cell::Float(p[i])]);
                }
                csv.row(&row)?;
            }
            csv.finish()?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct SpectrumJson<'a> {
                #[serde(flatten)]
                label: BlockLabel,
                stagger: f64,
                eigenvalues: &'a [f64],
                overlap_z2: Option<&'a [f64]>,
                pr2: Option<&'a [f64]>,
            }
            out.json(
                "spectrum.json",
                &SpectrumJson {
                    label: block.label(),
                    stagger,
                    eigenvalues: &spectrum.eigenvalues,
                    overlap_z2: observables.as_ref().map(|o| o.0.as_slice()),
                    pr2: observables.as_ref().map(|o| o.1.as_slice()),
                },
            )?;
        }
    }
    out.json("dos.json", &density_of_states(&spectrum.eigenvalues, bins)?)?;
    if let Block::Sector(s) = &block {
        out.json("sector.json", &s.summary())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct StatisticsJson<'a> {
    #[serde(rename = "L")]
    length: Option<usize>,
    #[serde(rename = "k")]
    momentum: Option<usize>,
    #[serde(rename = "I")]
    inversion: Option<Parity>,
    source: &'a str,
    dimension: usize,
    window: (usize, usize),
    unfold_degree: usize,
    spacing_count: usize,
    ks_poisson: f64,
    ks_semipoisson: f64,
    ks_wd: f64,
    r_mean: f64,
    closest: Reference,
}

fn statistics_json<'a>(label: Option<BlockLabel>, source: &'a str, dimension: usize, s: &LevelStatistics) -> StatisticsJson<'a> {
    StatisticsJson {
        length: label.map(|l| l.length),
        momentum: label.and_then(|l| l.momentum),
        inversion: label.and_then(|l| l.inversion),
        source,
        dimension,
        window: s.window,
        unfold_degree: s.unfold_degree,
        spacing_count: s.spacings.len(),
        ks_poisson: s.ks_poisson,
        ks_semipoisson: s.ks_semipoisson,
        ks_wd: s.ks_wd,
        r_mean: s.r_mean,
        closest: s.closest(),
    }
}

fn write_histogram(out: &mut Output, name: &str, s: &LevelStatistics) -> anyhow::Result<()> {
    let mut csv = out.csv(name, &["s_lo", "s_hi", "density", "poisson", "semipoisson", "wd"])?;
    let h = &s.histogram;
    for (i, &d) in h.density.iter().enumerate() {
        let mid = 0.5 * (h.edges[i] + h.edges[i + 1]);
        csv.row(&[
            Cell::Float(h.edges[i]),
            Cell::Float(h.edges[i + 1]),
            Cell::Float(d),
            Cell::Float(Reference::Poisson.density(mid)),
            Cell::Float(Reference::SemiPoisson.density(mid)),
            Cell::Float(Reference::WignerDyson.density(mid)),
        ])?;
    }
    csv.finish()?;
    Ok(())
}

/// `k = 0, I = +1` unless the user picked a block.
fn statistics_block(c: &Common) -> anyhow::Result<Block> {
    let basis = basis_of(c)?;
    if c.momentum.is_none() && c.inversion.is_none() && c.bc == Boundary::Periodic {
        return Ok(Block::sector(basis, 0, Some(Parity::Even))?);
    }
    block_of(c, basis)
}

fn sector_statistics(block: &Block, degree: usize) -> anyhow::Result<(Vec<f64>, LevelStatistics)> {
    let spectrum = diagonalize(block, false)?;
    let stats = level_statistics(&spectrum.eigenvalues, standard_window(spectrum.dim()), degree)?;
    Ok((spectrum.eigenvalues, stats))
}

fn cmd_levelstats(
    c: &Common,
    degree: usize,
    control: Option<Control>,
    seed: Option<u64>,
    out: &mut Output,
) -> anyhow::Result<()> {
    if let Some(control) = control {
        let seed = seed.ok_or_else(|| Error::invalid("synthetic controls need an explicit --seed"))?;
        let (stats, source, dim) = match control {
            Control::Poisson => (poisson_control(c.length, degree, seed)?, "poisson_control", c.length),
            Control::Goe => (goe_control(c.length, GOE_CONTROL_SAMPLES, degree, seed)?, "goe_control", c.length),
        };
        out.json("stats.json", &statistics_json(None, source, dim, &stats))?;
        return write_histogram(out, "histogram.csv", &stats);
    }
    if seed.is_some() {
        return Err(Error::invalid("--seed only applies to --control runs").into());
    }
    let block = statistics_block(c)?;
    let (_, stats) = sector_statistics(&block, degree)?;
    out.json("stats.json", &statistics_json(Some(block.label()), "hamiltonian", block.len(), &stats))?;
    write_histogram(out, "histogram.csv", &stats)
}

fn require_periodic(c: &Common) -> anyhow::Result<()> {
    if c.bc != Boundary::Periodic || c.momentum.is_some() || c.inversion.is_some() {
        return Err(Error::invalid("this analysis runs on the (k=0, I=+1) and (k=L/2, I=-1) sectors of a ring").into());
    }
    Ok(())
}

fn write_band(analysis: &BandAnalysis, format: Format, out: &mut Output) -> anyhow::Result<()> {
    match format {
        Format::Csv => {
            let w = out.text("scatter.csv")?;
            write_scatter(&analysis.scatter, Some(&analysis.band), w)?.flush()?;
        }
        Format::Json => {
            let keys = analysis.band.member_keys();
            #[derive(Serialize)]
            struct Point {
                energy: f64,
                overlap: f64,
                pr2: f64,
                is_special: bool,
            }
            let points: Vec<Point> = analysis
                .scatter
                .points
                .iter()
                .map(|p| Point {
                    energy: p.energy,
                    overlap: p.overlap,
                    pr2: p.pr2,
                    is_special: keys.contains(&(p.block, p.index)),
                })
                .collect();
            out.json("scatter.json", &points)?;
        }
    }
    #[derive(Serialize)]
    struct BandFile<T: Serialize> {
        #[serde(flatten)]
        band: T,
        greedy_agrees: bool,
        sectors: Vec<BlockLabel>,
    }
    out.json(
        "band.json",
        &BandFile { band: analysis.band.json(), greedy_agrees: analysis.greedy_agrees(), sectors: analysis.scatter.labels.clone() },
    )
}

fn cmd_scars(c: &Common, out: &mut Output) -> anyhow::Result<()> {
    require_periodic(c)?;
    let analysis = analyze_band(c.length)?;
    write_band(&analysis, c.format, out)
}

fn write_comparison(analysis: &BandAnalysis, out: &mut Output) -> anyhow::Result<()> {
    let comparison = compare_to_exact(&analysis.fsa, &analysis.exact_states()?)?;
    for pair in &comparison.pairs {
        let w = out.text(&format!("profile_{:02}.csv", pair.fsa_index))?;
        pair.write_profile(w)?.flush()?;
    }
    #[derive(Serialize)]
    struct PairSummary {
        fsa_index: usize,
        fsa_energy: f64,
        exact_energy: f64,
        relative_difference: Option<f64>,
    }
    #[derive(Serialize)]
    struct ComparisonJson {
        #[serde(rename = "L")]
        length: usize,
        mean_relative_difference: f64,
        pairs: Vec<PairSummary>,
    }
    out.json(
        "comparison.json",
        &ComparisonJson {
            length: analysis.band.length,
            mean_relative_difference: comparison.mean_relative_difference,
            pairs: comparison
                .pairs
                .iter()
                .map(|p| PairSummary {
                    fsa_index: p.fsa_index,
                    fsa_energy: p.fsa_energy,
                    exact_energy: p.exact_energy,
                    relative_difference: p.relative_difference,
                })
                .collect(),
        },
    )
}

fn cmd_fsa(c: &Common, compare: bool, out: &mut Output) -> anyhow::Result<()> {
    if c.momentum.is_some() || c.inversion.is_some() {
        return Err(Error::invalid("the FSA runs on the full basis; drop --momentum/--inversion").into());
    }
    if compare {
        require_periodic(c)?;
        if c.length > FIG3_EXACT_MAX_L {
            return Err(Error::Capacity(format!("exact comparison is limited to L <= {FIG3_EXACT_MAX_L}")).into());
        }
        let analysis = analyze_band(c.length)?;
        out.json("fsa.json", &analysis.fsa.report())?;
        return write_comparison(&analysis, out);
    }
    out.json("fsa.json", &run_fsa(c.length, c.bc)?.report())
}

fn resolve_method(arg: MethodArg, basis: &ConstrainedBasis) -> Method {
    match arg {
        MethodArg::Spectral => Method::Spectral,
        MethodArg::Krylov => Method::Krylov,
        MethodArg::Auto => {
            let limit = match basis.boundary() {
                Boundary::Periodic => AUTO_SPECTRAL_PBC,
                Boundary::Open => AUTO_SPECTRAL_OBC,
            };
            if basis.len() <= limit {
                Method::Spectral
            } else {
                Method::Krylov
            }
        }
    }
}

fn quench(
    basis: &Arc<ConstrainedBasis>,
    pattern: Pattern,
    args: &QuenchArgs,
    cut: Option<usize>,
) -> anyhow::Result<QuenchRun> {
    let initial = product_state(pattern, basis.length(), basis.boundary())?;
    let grid = TimeGrid::new(0.0, args.tmax, args.dt)?;
    let options = QuenchOptions {
        method: resolve_method(args.method, basis),
        krylov_dim: args.krylov_dim,
        cut,
        ..QuenchOptions::default()
    };
    Ok(dynamics::evolve(basis, initial, &grid, &options)?)
}

fn analysis_options(args: &QuenchArgs) -> AnalysisOptions {
    let window = match (args.fit_start, args.fit_stop) {
        (None, None) => None,
        (a, b) => Some((a.unwrap_or(0.0), b.unwrap_or(args.tmax))),
    };
    AnalysisOptions { window, ..AnalysisOptions::default() }
}

fn write_run(run: &QuenchRun, name: &str, format: Format, out: &mut Output) -> anyhow::Result<()> {
    match format {
        Format::Csv => {
            let w = out.text(&format!("{name}.csv"))?;
            run.write_csv(w)?.flush()?;
        }
        Format::Json => out.json(&format!("{name}.json"), run)?,
    }
    Ok(())
}

/// Run metadata without the time series.
#[derive(Serialize)]
struct RunSummary<'a> {
    #[serde(rename = "L")]
    length: usize,
    boundary: Boundary,
    initial: &'a str,
    method: Method,
    grid: TimeGrid,
    cut: usize,
    entropy_log_base: &'a str,
    energy: f64,
    max_norm_error: f64,
    max_energy_drift: f64,
    entropy_bound: f64,
    saturation_time: Option<f64>,
}

fn summary(run: &QuenchRun) -> RunSummary<'_> {
    RunSummary {
        length: run.length,
        boundary: run.boundary,
        initial: &run.initial,
        method: run.method,
        grid: run.grid,
        cut: run.cut,
        entropy_log_base: &run.entropy_log_base,
        energy: run.energy,
        max_norm_error: run.max_norm_error,
        max_energy_drift: run.max_energy_drift,
        entropy_bound: run.entropy_bound,
        saturation_time: run.saturation_time,
    }
}

fn cmd_dynamics(
    c: &Common,
    args: &QuenchArgs,
    state: &str,
    cut: Option<usize>,
    skip_analysis: bool,
    out: &mut Output,
) -> anyhow::Result<()> {
    if c.momentum.is_some() || c.inversion.is_some() {
        return Err(Error::invalid("quenches run on the full basis; drop --momentum/--inversion").into());
    }
    let pattern: Pattern = state.parse()?;
    let basis = basis_of(c)?;
    let run = quench(&basis, pattern, args, cut)?;
    write_run(&run, "timeseries", c.format, out)?;
    out.json("run.json", &summary(&run))?;
    if !skip_analysis {
        let analysis = dynamics::oscillation_analysis(&run, &analysis_options(args))?;
        out.json("analysis.json", &analysis.json())?;
    }
    Ok(())
}

fn check_range(figure: &str, length: usize, min: usize, max: usize) -> anyhow::Result<()> {
    if length < min || length > max {
        return Err(Error::Capacity(format!("{figure} supports {min} <= L <= {max} (got {length})")).into());
    }
    if length % 2 != 0 {
        return Err(Error::invalid(format!("{figure} needs even L (got {length})")).into());
    }
    Ok(())
}

fn fig2(length: usize, args: &QuenchArgs, slope_window: f64, out: &mut Output) -> anyhow::Result<()> {
    check_range("fig2", length, 4, FIG2_MAX_L)?;
    let basis = Arc::new(ConstrainedBasis::enumerate(length, Boundary::Periodic)?);
    #[derive(Serialize)]
    struct Slope {
        state: String,
        slope: f64,
        window: (f64, f64),
    }
    let mut slopes = Vec::new();
    let mut runs = Vec::new();
    for pattern in [Pattern::Z2, Pattern::Period(3), Pattern::Period(4), Pattern::Vacuum] {
        if product_state(pattern, length, Boundary::Periodic).is_err() {
            continue;
        }
        let run = quench(&basis, pattern, args, None)?;
        write_run(&run, &format!("quench_{pattern}"), Format::Csv, out)?;
        let stop = slope_window.min(args.tmax);
        let n = run.times.iter().filter(|&&t| t <= stop + 1e-12).count();
        let fit = dynamics::linear_fit(&run.times[..n], &run.entropy[..n])?;
        slopes.push(Slope { state: pattern.to_string(), slope: fit.slope, window: (0.0, stop) });
        if pattern == Pattern::Z2 {
            let analysis = dynamics::oscillation_analysis(&run, &analysis_options(args))?;
            let mut csv = out.csv("z2_residual.csv", &["t", "residual"])?;
            for (t, r) in analysis.times.iter().zip(&analysis.residual) {
                csv.row(&[Cell::Float(*t), Cell::Float(*r)])?;
            }
            csv.finish()?;
            out.json("analysis.json", &analysis.json())?;
        }
        runs.push(run);
    }
    out.json("slopes.json", &slopes)?;
    let summaries: Vec<RunSummary> = runs.iter().map(summary).collect();
    out.json("runs.json", &summaries)
}

fn fig3a(length: usize, out: &mut Output) -> anyhow::Result<()> {
    check_range("fig3a", length, 4, FIG3_FSA_MAX_L)?;
    if length > FIG3_EXACT_MAX_L {
        return out.json("fsa.json", &run_fsa(length, Boundary::Periodic)?.report());
    }
    let analysis = analyze_band(length)?;
    write_band(&analysis, Format::Csv, out)?;
    out.json("fsa.json", &analysis.fsa.report())
}

fn fig3bc(length: usize, out: &mut Output) -> anyhow::Result<()> {
    check_range("fig3bc", length, 4, FIG3_FSA_MAX_L)?;
    if length > FIG3_EXACT_MAX_L {
        return out.json("fsa.json", &run_fsa(length, Boundary::Periodic)?.report());
    }
    let analysis = analyze_band(length)?;
    out.json("fsa.json", &analysis.fsa.report())?;
    write_comparison(&analysis, out)
}

fn fig3d(length: usize, out: &mut Output) -> anyhow::Result<()> {
    check_range("fig3d", length, FIG3D_MIN_L, FIG3_EXACT_MAX_L)?;
    let mut csv = out.csv("pr2.csv", &["L", "sector_dimension", "band_mean", "mid_spectrum_mean", "ratio"])?;
    let mut rows = Vec::new();
    let mut last = None;
    for l in (FIG3D_MIN_L..=length).step_by(2) {
        let analysis = analyze_band(l)?;
        let e = pr2_enhancement(&analysis.scatter, &analysis.band, 0)?;
        csv.row(&[
            Cell::Int(l as i64),
            Cell::Int(e.sector_dimension as i64),
            Cell::Float(e.band_mean),
            Cell::Float(e.mid_spectrum_mean),
            Cell::Float(e.ratio),
        ])?;
        rows.push(e);
        last = Some(analysis);
    }
    csv.finish()?;
    out.json("pr2.json", &rows)?;
    let analysis = last.expect("at least one length");
    let keys = analysis.band.member_keys();
    let mut csv = out.csv("pr2_scatter.csv", &["energy", "pr2", "is_special"])?;
    for p in analysis.scatter.points.iter().filter(|p| p.block == 0) {
        csv.row(&[Cell::Float(p.energy), Cell::Float(p.pr2), Cell::Bool(keys.contains(&(p.block, p.index)))])?;
    }
    csv.finish()?;
    Ok(())
}

fn fig4(length: usize, seed: u64, out: &mut Output) -> anyhow::Result<()> {
    check_range("fig4", length, 4, FIG4_MAX_L)?;
    let basis = Arc::new(ConstrainedBasis::enumerate(length, Boundary::Periodic)?);
    let block = Block::sector(basis, 0, Some(Parity::Even))?;
    let (eigenvalues, stats) = sector_statistics(&block, DEFAULT_UNFOLD_DEGREE)?;
    out.json("stats.json", &statistics_json(Some(block.label()), "hamiltonian", block.len(), &stats))?;
    write_histogram(out, "histogram.csv", &stats)?;
    let dos = density_of_states(&eigenvalues, 60)?;
    let mut csv = out.csv("dos.csv", &["e_lo", "e_hi", "count"])?;
    for (i, &n) in dos.counts.iter().enumerate() {
        csv.row(&[Cell::Float(dos.edges[i]), Cell::Float(dos.edges[i + 1]), Cell::Int(n as i64)])?;
    }
    csv.finish()?;
    out.json("dos.json", &dos)?;
    let window = stats.window.1 - stats.window.0;
    let poisson = poisson_control(window, DEFAULT_UNFOLD_DEGREE, seed)?;
    let goe = goe_control(GOE_CONTROL_DIM, GOE_CONTROL_SAMPLES, DEFAULT_UNFOLD_DEGREE, seed)?;
    out.json(
        "controls.json",
        &[
            statistics_json(None, "poisson_control", window, &poisson),
            statistics_json(None, "goe_control", GOE_CONTROL_DIM, &goe),
        ],
    )
}
