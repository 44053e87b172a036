use gamma_core::cli::{exit_code, parse_config, run};
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "usage: gamma <config-file> [key=value ...]\n\
  commands (config key `command`): mesh, solve, sweep, aux, verify, report\n\
  GAMMA_THREADS caps the number of worker threads";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args.iter().any(|a| a == "-h" || a == "--help") {
        eprintln!("{USAGE}");
        return ExitCode::from(if args.is_empty() { 2 } else { 0 });
    }
    if let Ok(v) = std::env::var("GAMMA_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    eprintln!("warning: could not size thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: GAMMA_THREADS must be a positive integer, got '{v}'");
                return ExitCode::from(2);
            }
        }
    }
    let plan = match load(&args) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = run(&plan);
    match &result {
        Ok(summary) => {
            println!("{}", summary.report);
            for a in &summary.artifacts {
                eprintln!("wrote {}", a.display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}

fn load(args: &[String]) -> gamma_core::Result<gamma_core::cli::RunPlan> {
    let path = PathBuf::from(&args[0]);
    if args.len() == 1 {
        return parse_config(&path);
    }
    // Extra key=value arguments are appended as further config lines.
    let mut text = std::fs::read_to_string(&path).map_err(|e| gamma_core::Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    text.push('\n');
    text.push_str(&args[1..].join("\n"));
    gamma_core::cli::parse_config_str(&text)
}
