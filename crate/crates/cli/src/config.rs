//! Run configuration: defaults, then a config file, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qdi_core::metrics::AreaTable;
use qdi_core::verify::{CheckKind, Coverage};
use qdi_core::{DelayModel, EnvMode, FullAdderKind, MultiplierSpec, Protocol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Gen,
    Sim,
    Verify,
    Bench,
    Report,
}

/// Operand coverage as written on the command line: `auto`,
/// `exhaustive` or `random:<count>`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CoverageArg {
    /// Exhaustive up to 4×4, otherwise 10,000 random pairs.
    #[default]
    Auto,
    Exhaustive,
    Random(usize),
}

impl CoverageArg {
    pub fn resolve(self, n: usize, seed: u64) -> Coverage {
        match self {
            CoverageArg::Auto => qdi_core::metrics::Workload::default_for(n, seed).coverage,
            CoverageArg::Exhaustive => Coverage::Exhaustive,
            CoverageArg::Random(count) => Coverage::Random { count, seed },
        }
    }
}

impl FromStr for CoverageArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(CoverageArg::Auto),
            "exhaustive" => Ok(CoverageArg::Exhaustive),
            _ => s
                .strip_prefix("random:")
                .and_then(|c| c.parse().ok())
                .map(CoverageArg::Random)
                .ok_or_else(|| format!("bad coverage `{s}` (expected auto, exhaustive or random:<count>)")),
        }
    }
}

impl fmt::Display for CoverageArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverageArg::Auto => f.write_str("auto"),
            CoverageArg::Exhaustive => f.write_str("exhaustive"),
            CoverageArg::Random(c) => write!(f, "random:{c}"),
        }
    }
}

impl TryFrom<String> for CoverageArg {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<CoverageArg> for String {
    fn from(c: CoverageArg) -> String {
        c.to_string()
    }
}

pub const DEFAULT_CHECKS: [CheckKind; 6] = [
    CheckKind::Functional,
    CheckKind::ProtocolConformance,
    CheckKind::Monotonicity,
    CheckKind::WeakIndication,
    CheckKind::DelayInsensitivity,
    CheckKind::Duality,
];

/// Everything that determines a run. Recorded verbatim in every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: usize,
    pub fa_kind: FullAdderKind,
    pub protocol: Protocol,
    pub c3_as_tree: bool,
    pub or4_as_tree: bool,
    /// `unit`, `table:<path>` or `random:<lo>,<hi>`.
    pub delay_model: String,
    pub seed: u64,
    pub coverage: CoverageArg,
    pub mode: EnvMode,
    /// Netlist file to load instead of generating one.
    pub netlist: Option<PathBuf>,
    /// Operand pairs for `sim`, overriding coverage.
    pub operands: Vec<[u64; 2]>,
    pub out: PathBuf,
    pub trace: bool,
    pub area_table: Option<PathBuf>,
    pub sizes: Vec<usize>,
    pub checks: Vec<CheckKind>,
    pub di_seeds: u64,
    pub di_pairs: usize,
    pub weak_samples: usize,
    /// `swap:<instance>` or `fork:<buffers>`, applied by `gen`.
    pub mutate: Option<String>,
    pub inputs: Vec<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: CommandKind::Gen,
            n: 4,
            fa_kind: FullAdderKind::Weak,
            protocol: Protocol::Rtz,
            c3_as_tree: false,
            or4_as_tree: false,
            delay_model: "unit".into(),
            seed: 1,
            coverage: CoverageArg::Auto,
            mode: EnvMode::Settled,
            netlist: None,
            operands: Vec::new(),
            out: PathBuf::from("out"),
            trace: false,
            area_table: None,
            sizes: vec![4],
            checks: DEFAULT_CHECKS.to_vec(),
            di_seeds: 100,
            di_pairs: 64,
            weak_samples: 256,
            mutate: None,
            inputs: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn spec(&self) -> MultiplierSpec {
        MultiplierSpec {
            n: self.n,
            fa_kind: self.fa_kind,
            protocol: self.protocol,
            c3_as_tree: self.c3_as_tree,
            or4_as_tree: self.or4_as_tree,
        }
    }

    /// Resolves the delay model, reading table files and applying the seed
    /// to random models.
    pub fn delay(&self) -> Result<DelayModel> {
        let model = match self.delay_model.strip_prefix("table:") {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading delay table {path}"))?;
                let table = serde_json::from_str(&text).with_context(|| format!("parsing delay table {path}"))?;
                DelayModel::FixedTable { table }
            }
            None => self.delay_model.parse::<DelayModel>()?.reseeded(self.seed),
        };
        model.check()?;
        Ok(model)
    }

    pub fn area(&self) -> Result<AreaTable> {
        match &self.area_table {
            None => Ok(AreaTable::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading area table {}", path.display()))?;
                let overrides: BTreeMap<_, _> =
                    serde_json::from_str(&text).with_context(|| format!("parsing area table {}", path.display()))?;
                Ok(AreaTable::with_overrides(overrides)?)
            }
        }
    }
}

/// Reads a config file. TOML and JSON configs are accepted, as are JSON
/// artifacts written by a previous run, whose embedded config is used.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "toml") {
        return toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()));
    }
    let doc: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let embedded = doc
        .get("config")
        .or_else(|| doc.pointer("/meta/provenance/config"))
        .cloned();
    let value = embedded.unwrap_or(doc);
    serde_json::from_value(value).with_context(|| format!("parsing config {}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "qdi", version, about = "Dual-rail indicating multiplier generator, simulator and checker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for random delays and random operand sets.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// unit | table:<path> | random:<lo>,<hi>
    #[arg(long, global = true)]
    pub delay_model: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print JSON to stdout instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// TOML or JSON config file, or an artifact from an earlier run. Flags
    /// override its values; without a subcommand its command is rerun.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct DesignArgs {
    /// Operand width.
    #[arg(long)]
    pub n: Option<usize>,
    /// Full adder cell: dims or weak.
    #[arg(long = "fa")]
    pub fa_kind: Option<FullAdderKind>,
    /// Handshake protocol: rtz or rto.
    #[arg(long)]
    pub protocol: Option<Protocol>,
    /// Build three-input C-elements as two-input trees.
    #[arg(long)]
    pub c3_tree: bool,
    /// Build four-input ORs as two-input trees.
    #[arg(long)]
    pub or4_tree: bool,
    /// Load this netlist instead of generating one.
    #[arg(long)]
    pub netlist: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a multiplier netlist and print its structure.
    Gen {
        #[command(flatten)]
        design: DesignArgs,
        /// Inject a fault: swap:<instance> or fork:<buffers>.
        #[arg(long)]
        mutate: Option<String>,
    },
    /// Run operands through the handshake harness.
    Sim {
        #[command(flatten)]
        design: DesignArgs,
        /// auto | exhaustive | random:<count>
        #[arg(long)]
        coverage: Option<CoverageArg>,
        /// Explicit operand pairs, e.g. 13x11,2x3.
        #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
        operands: Vec<[u64; 2]>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Also write the event trace as CSV and VCD.
        #[arg(long)]
        trace: bool,
    },
    /// Run the checker suite; exit 1 if any check fails.
    Verify {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        coverage: Option<CoverageArg>,
        /// Comma-separated check names.
        #[arg(long, value_delimiter = ',', value_parser = parse_check)]
        checks: Vec<CheckKind>,
        /// Random delay assignments for the delay-insensitivity check.
        #[arg(long)]
        di_seeds: Option<u64>,
        /// Operand pairs per delay assignment.
        #[arg(long)]
        di_pairs: Option<usize>,
        /// Sampled arrival stimuli for weak indication on large netlists.
        #[arg(long)]
        weak_samples: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Measure every design and rank them per size.
    Bench {
        /// Comma-separated operand widths.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// JSON map of gate kind to transistor count overriding the defaults.
        #[arg(long)]
        area_table: Option<PathBuf>,
    },
    /// Summarise artifacts written by other commands.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Settled,
    Reactive,
}

impl From<ModeArg> for EnvMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Settled => EnvMode::Settled,
            ModeArg::Reactive => EnvMode::Reactive,
        }
    }
}

fn parse_pair(s: &str) -> Result<[u64; 2], String> {
    let (a, b) = s.split_once('x').ok_or_else(|| format!("bad operand pair `{s}` (expected AxB)"))?;
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad operand `{t}`: {e}"));
    Ok([num(a)?, num(b)?])
}

fn parse_check(s: &str) -> Result<CheckKind, String> {
    let all = [
        CheckKind::Functional,
        CheckKind::ProtocolConformance,
        CheckKind::Monotonicity,
        CheckKind::StrongIndication,
        CheckKind::WeakIndication,
        CheckKind::DelayInsensitivity,
        CheckKind::Duality,
    ];
    all.into_iter().find(|c| c.name() == s).ok_or_else(|| {
        let names: Vec<&str> = all.iter().map(|c| c.name()).collect();
        format!("unknown check `{s}` (expected one of {})", names.join(", "))
    })
}

impl DesignArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.n, self.n);
        set(&mut c.fa_kind, self.fa_kind);
        set(&mut c.protocol, self.protocol);
        c.c3_as_tree |= self.c3_tree;
        c.or4_as_tree |= self.or4_tree;
        if self.netlist.is_some() {
            c.netlist = self.netlist;
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Builds the effective config. Returns it with the `--json` flag, which
/// only affects what is printed.
pub fn resolve(cli: Cli) -> Result<(RunConfig, bool)> {
    let g = cli.global;
    let mut c = match &g.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        None if g.config.is_none() => bail!("no command given (try --help)"),
        None => {}
        Some(Command::Gen { design, mutate }) => {
            c.command = CommandKind::Gen;
            design.apply(&mut c);
            if mutate.is_some() {
                c.mutate = mutate;
            }
        }
        Some(Command::Sim { design, coverage, operands, mode, trace }) => {
            c.command = CommandKind::Sim;
            design.apply(&mut c);
            set(&mut c.coverage, coverage);
            if !operands.is_empty() {
                c.operands = operands;
            }
            set(&mut c.mode, mode.map(EnvMode::from));
            c.trace |= trace;
        }
        Some(Command::Verify { design, coverage, checks, di_seeds, di_pairs, weak_samples, mode }) => {
            c.command = CommandKind::Verify;
            design.apply(&mut c);
            set(&mut c.coverage, coverage);
            if !checks.is_empty() {
                c.checks = checks;
            }
            set(&mut c.di_seeds, di_seeds);
            set(&mut c.di_pairs, di_pairs);
            set(&mut c.weak_samples, weak_samples);
            set(&mut c.mode, mode.map(EnvMode::from));
        }
        Some(Command::Bench { sizes, area_table }) => {
            c.command = CommandKind::Bench;
            if !sizes.is_empty() {
                c.sizes = sizes;
            }
            if area_table.is_some() {
                c.area_table = area_table;
            }
        }
        Some(Command::Report { inputs }) => {
            c.command = CommandKind::Report;
            c.inputs = inputs;
        }
    }
    set(&mut c.seed, g.seed);
    set(&mut c.delay_model, g.delay_model);
    set(&mut c.out, g.out);
    Ok((c, g.json))
}
