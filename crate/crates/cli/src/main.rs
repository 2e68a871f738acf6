use std::process::ExitCode;

use clap::Parser;

use qlab_cli::commands::{execute, Cli};
use qlab_cli::{CliError, EXIT_IO, EXIT_VALIDATION};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            let msg = msg.trim().trim_start_matches("error: ");
            eprintln!("{}", serde_json::json!({ "error": "Usage", "exit_code": EXIT_VALIDATION, "message": msg }));
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    if let Some(n) = std::env::var("QLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Ignored if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let result = execute(&cli).and_then(|report| match &cli.run.out {
        Some(path) => std::fs::write(path, report).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{report}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            let code = e.exit_code();
            ExitCode::from(if (1..=255).contains(&code) { code as u8 } else { EXIT_IO as u8 })
        }
    }
}
