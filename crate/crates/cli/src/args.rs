use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mergelab::linalg::{cis, C64};

#[derive(Debug, Parser)]
#[command(name = "mergelab", version, about = "Exact simulation of one-shot LOCC state merging")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// First phase parameter, as `re+imi` or `exp:θ`.
    #[arg(long, global = true, value_parser = parse_gamma, default_value = "exp:0.7853981633974483")]
    pub gamma1: C64,
    /// Second phase parameter, as `re+imi` or `exp:θ`.
    #[arg(long, global = true, value_parser = parse_gamma, default_value = "exp:0.7853981633974483")]
    pub gamma2: C64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolName {
    Twoway,
    Oneway,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InstanceName {
    /// The three-state family built from the phase parameters.
    Psi,
    /// A control instance where A holds a product state.
    Easy,
    /// A family that A can rule out locally but not merge.
    Elimination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportItem {
    Instance,
    Ki,
    Twoway,
    Oneway,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check orthonormality, completeness, the block decomposition and both protocols.
    Verify,
    /// Simulate a protocol and report every branch.
    Run {
        #[arg(value_enum)]
        protocol: ProtocolName,
        /// Print one JSON line per branch instead of the full report.
        #[arg(long)]
        trace: bool,
    },
    /// Entropies of the tripartite state.
    Entropy,
    /// Run a protocol on one family member and identify it at B.
    Discriminate {
        l: usize,
        #[arg(long, value_enum, default_value = "twoway")]
        protocol: ProtocolName,
    },
    /// Run a protocol on a superposition of family members.
    Decode {
        /// Comma-separated amplitudes (complex literals allowed); normalized internally.
        #[arg(long, value_delimiter = ',', value_parser = parse_complex, required = true)]
        alpha: Vec<C64>,
        #[arg(long, value_enum, default_value = "twoway")]
        protocol: ProtocolName,
    },
    /// Search zero-cost one-way protocols for the best merging fidelity.
    Search {
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        /// Defaults to MERGELAB_SEED, then 0.
        #[arg(long, env = "MERGELAB_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 121)]
        max_kraus: usize,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        #[arg(long, value_enum, default_value = "psi")]
        instance: InstanceName,
    },
    /// Print an object as JSON.
    Export {
        #[arg(value_enum, default_value = "instance")]
        item: ExportItem,
    },
}

pub fn parse_complex(s: &str) -> Result<C64, String> {
    C64::from_str(s.trim()).map_err(|_| format!("`{s}` is not a complex literal like 0.5-1.5i"))
}

pub fn parse_gamma(s: &str) -> Result<C64, String> {
    match s.trim().strip_prefix("exp:") {
        Some(theta) => theta.trim().parse::<f64>().map(cis).map_err(|_| format!("`{theta}` is not an angle")),
        None => parse_complex(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_forms() {
        assert_eq!(parse_gamma("1+0i").unwrap(), C64::new(1.0, 0.0));
        assert_eq!(parse_gamma("0.5-2i").unwrap(), C64::new(0.5, -2.0));
        assert_eq!(parse_gamma("exp:0").unwrap(), C64::new(1.0, 0.0));
        let g = parse_gamma("exp:0.7853981633974483").unwrap();
        assert_eq!(g, cis(std::f64::consts::FRAC_PI_4));
        assert!(parse_gamma("exp:x").is_err());
        assert!(parse_gamma("one").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
