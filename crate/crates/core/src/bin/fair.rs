use std::process::ExitCode;

use clap::Parser;
use fair::cli::{run, Cli, CliError};
use fair::FairError;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Run(FairError::NotPositiveDefinite { matrix, .. }) = &e {
                let eig = matrix.clone().symmetric_eigenvalues();
                eprintln!(
                    "  {}x{} matrix, eigenvalues in [{:e}, {:e}]",
                    matrix.nrows(),
                    matrix.ncols(),
                    eig.min(),
                    eig.max()
                );
            }
            ExitCode::from(e.exit_code())
        }
    }
}
