use std::path::{Path, PathBuf};
use std::process::ExitCode;

use entropic_spectra_cli::{compare, parse_config, run};

const USAGE: &str = "\
entropic-spectra: seeded experiment runner for mirror-descent solvers on spectrahedra

USAGE:
    entropic-spectra run [--config FILE] [--<key> <value> ...]
    entropic-spectra compare --configs FILE1,FILE2,...

Config files are flat key=value text; flags use the same keys and win over
the file. Unknown keys are rejected. Keys and defaults are documented in the
README. Exit status: 0 success, 1 invalid configuration, 2 output not
writable.
";

fn fail(code: u8, message: &str) -> ExitCode {
    eprintln!("{message}");
    ExitCode::from(code)
}

fn run_command(args: &[String]) -> ExitCode {
    let mut config_file: Option<PathBuf> = None;
    let mut flags: Vec<(String, String)> = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return fail(1, &format!("unexpected argument `{arg}`\n\n{USAGE}"));
        };
        let Some(value) = it.next() else {
            return fail(1, &format!("flag --{key} needs a value"));
        };
        if key == "config" {
            config_file = Some(PathBuf::from(value));
        } else {
            flags.push((key.to_string(), value.clone()));
        }
    }
    let config = match parse_config(config_file.as_deref(), &flags) {
        Ok(c) => c,
        Err(e) => return fail(1, &e.to_string()),
    };
    match run(&config) {
        Ok(result) => {
            let rows: usize = result.paths.iter().map(|p| p.trace.rows.len()).sum();
            println!(
                "wrote {} ({} trace rows, {} paths, final mean gap {:e})",
                config.output_path().display(),
                rows,
                result.paths.len(),
                result.final_mean_gap()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.exit_code() as u8, &e.to_string()),
    }
}

fn compare_command(args: &[String]) -> ExitCode {
    let mut files: Option<String> = None;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        if arg == "--configs" {
            match it.next() {
                Some(v) => files = Some(v.clone()),
                None => return fail(1, "flag --configs needs a comma-separated list of files"),
            }
        } else {
            return fail(1, &format!("unexpected argument `{arg}`\n\n{USAGE}"));
        }
    }
    let Some(files) = files else {
        return fail(1, &format!("compare requires --configs\n\n{USAGE}"));
    };
    let mut configs = Vec::new();
    for name in files.split(',').filter(|s| !s.is_empty()) {
        match parse_config(Some(Path::new(name)), &[]) {
            Ok(c) => configs.push(c),
            Err(e) => return fail(1, &format!("{name}: {e}")),
        }
    }
    match compare(&configs) {
        Ok(table) => {
            print!("{table}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.exit_code() as u8, &e.to_string()),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("run") => run_command(&args[1..]),
        Some("compare") => compare_command(&args[1..]),
        Some("--help") | Some("-h") | Some("help") => {
            print!("{USAGE}");
            ExitCode::SUCCESS
        }
        _ => fail(1, USAGE),
    }
}
