//! The `sample` command.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use formation::codec::Document;
use formation::rng::stream;
use formation::states::{density_with, haar_pure_with, hermitian_with};
use formation::{BipartiteDims, FourPartyDims};
use serde_json::json;

use crate::report::CliError;
use crate::{fresh_seed, write_output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleKind {
    /// Haar-random pure state.
    Pure,
    /// Random density matrix of the given rank (Hilbert–Schmidt at full rank).
    Mixed,
    /// Random Hermitian observable.
    Hermitian,
}

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub kind: SampleKind,
    /// `A B` for a bipartite file, or `D1A D1B D2A D2B` for a four-party file.
    #[arg(long, num_args = 2..=4, required = true)]
    pub dims: Vec<usize>,
    /// Rank of a mixed state; full rank when absent.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Generated and printed to standard error when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn run(args: &SampleArgs) -> Result<(), CliError> {
    let (split, four) = match args.dims[..] {
        [a, b] => (BipartiteDims::new(a, b)?, None),
        [d1a, d1b, d2a, d2b] => {
            let four = FourPartyDims::new(d1a, d1b, d2a, d2b)?;
            (four.system_split()?, Some(four))
        }
        _ => return Err(CliError::usage("--dims takes two or four values")),
    };
    if args.rank.is_some() && args.kind != SampleKind::Mixed {
        return Err(CliError::usage("--rank applies to mixed states only"));
    }
    let seed = args.seed.unwrap_or_else(|| {
        let s = fresh_seed();
        eprintln!("{}", json!({ "seed": s, "seedGenerated": true }));
        s
    });
    let mut rng = stream(seed, "sample", 0);
    let doc = match args.kind {
        SampleKind::Pure => Document::pure(haar_pure_with(split, &mut rng)),
        SampleKind::Mixed => Document::density(density_with(split, args.rank.unwrap_or(split.total()), &mut rng)?),
        SampleKind::Hermitian => Document::hermitian(hermitian_with(split, &mut rng)),
    };
    let doc = match four {
        Some(f) => doc.with_four_party(f)?,
        None => doc,
    };
    write_output(args.output.as_ref(), &doc.encode())
}
