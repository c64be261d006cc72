//! `oracle`: exhaustively enumerate block-shuffle outcomes and pretty-print
//! the exact distribution.

use std::path::PathBuf;

use clap::Args;
use shuffledp::grad::{enumerate_block_shuffles, GradientVector};

use crate::output::{format_sig, JSON_SIG_DIGITS};
use crate::{emit, io, CliError};

#[derive(Args)]
pub struct OracleArgs {
    /// Comma-separated gradient components, e.g. 1,2,3,4
    #[arg(long)]
    components: Option<String>,
    /// Gradient CSV to read instead of --components
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Row of the CSV to enumerate (0-based)
    #[arg(long, default_value_t = 0)]
    row: usize,
    /// Block size
    #[arg(long)]
    beta: usize,
    /// Tensor shape as a JSON array, e.g. `[2,2]`; defaults to flat
    #[arg(long)]
    shape: Option<String>,
    /// Write the listing here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: OracleArgs) -> Result<(), CliError> {
    let components = match (&args.components, &args.csv) {
        (Some(text), None) => io::parse_f64_list(text, "--components")?,
        (None, Some(path)) => {
            let rows = io::read_gradients_csv(path)?;
            rows.get(args.row)
                .cloned()
                .ok_or_else(|| {
                    CliError::validation(format!(
                        "--row {} out of range: {} rows in {}",
                        args.row,
                        rows.len(),
                        path.display()
                    ))
                })?
                .into_components()
        }
        _ => {
            return Err(CliError::validation(
                "exactly one of --components or --csv is required",
            ))
        }
    };
    let gradient = match &args.shape {
        Some(text) => GradientVector::new(components, io::parse_shape_json(text, "--shape")?)?,
        None => GradientVector::flat(components)?,
    };
    let dist = enumerate_block_shuffles(&gradient, args.beta)?;
    let mut text = format!(
        "block shuffle distribution: d={}, beta={}, blocks={}, outcomes={}\n",
        gradient.dim(),
        args.beta,
        dist.block_count(),
        dist.len(),
    );
    for (outcome, p) in dist.outcomes() {
        let row: Vec<String> = outcome
            .iter()
            .map(|&x| format_sig(x, JSON_SIG_DIGITS))
            .collect();
        text.push_str(&format!(
            "  p={}  [{}]\n",
            format_sig(*p, JSON_SIG_DIGITS),
            row.join(", ")
        ));
    }
    text.push_str(&format!(
        "total probability {}\n",
        format_sig(dist.total_probability(), JSON_SIG_DIGITS)
    ));
    emit(&text, args.out.as_ref())
}
