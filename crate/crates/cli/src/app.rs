//! Argument parsing and dispatch.

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::{commands, CliError, Flags, RunConfig};

#[derive(Parser)]
#[command(
    name = "wavestab",
    version,
    about = "Periodic water waves in finite depth: branches and their stability"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Critical speeds mu_n* for n = 1..n_max.
    Dispersion,
    /// Trace a branch from its bifurcation point; writes JSON and CSV.
    Branch,
    /// Lowest eigenvalue of the second variation along a branch file.
    Spectrum,
    /// Stability classes of the flat state over an (h, mu) grid.
    Region,
    /// Finite- and infinite-depth symbols of the Dirichlet-to-Neumann operator.
    Symbols,
    /// Run the identity, linearisation and form-equivalence suites.
    Verify,
}

fn run(command: Command, config: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Dispersion => commands::run_dispersion(config),
        Command::Branch => commands::run_branch(config),
        Command::Spectrum => commands::run_spectrum(config),
        Command::Region => commands::run_region(config),
        Command::Symbols => commands::run_symbols(config),
        Command::Verify => commands::run_verify(config),
    }
}

/// Runs one invocation and returns its exit code. Usage errors count as bad
/// configuration.
pub fn execute<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
        }
    };
    match RunConfig::resolve(&cli.flags).and_then(|config| run(cli.command, &config)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use std::fs;
    use std::path::Path;

    use serde_json::Value;
    use wavestab::continuation::critical_mu;

    use super::execute;

    fn run(args: &[&str]) -> u8 {
        execute(std::iter::once("wavestab").chain(args.iter().copied()))
    }

    fn path(dir: &Path, name: &str) -> String {
        dir.join(name).to_str().unwrap().to_string()
    }

    /// Provenance header and the data rows of a CSV file.
    fn read_table(path: &str) -> (Value, Vec<String>, Vec<Vec<String>>) {
        let text = fs::read_to_string(path).unwrap();
        let (first, rest) = text.split_once('\n').unwrap();
        let prov: Value = serde_json::from_str(first.strip_prefix("# ").unwrap()).unwrap();
        let mut reader = csv::Reader::from_reader(rest.as_bytes());
        let header = reader.headers().unwrap().iter().map(String::from).collect();
        let rows = reader
            .records()
            .map(|r| r.unwrap().iter().map(String::from).collect())
            .collect();
        (prov, header, rows)
    }

    fn f(s: &str) -> f64 {
        s.parse().unwrap()
    }

    #[test]
    fn dispersion_table_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let out = path(dir.path(), "d.csv");
        assert_eq!(run(&["dispersion", "--n-max", "3", "--out", &out]), 0);
        let (prov, header, rows) = read_table(&out);
        assert_eq!(prov["command"], "dispersion");
        assert_eq!(prov["config"]["n_max"], 3);
        assert_eq!(header, ["n", "mu_star"]);
        assert_eq!(rows.len(), 3);
        let expected = [0.7615942, 0.4820138, 0.3316849];
        for (row, e) in rows.iter().zip(expected) {
            let n: usize = row[0].parse().unwrap();
            assert_eq!(f(&row[1]), critical_mu(n, 1.0, 1.0).unwrap());
            assert!((f(&row[1]) - e).abs() < 5e-8);
        }
    }

    #[test]
    fn empty_dispersion_table_keeps_its_header() {
        let dir = tempfile::tempdir().unwrap();
        let out = path(dir.path(), "d.csv");
        assert_eq!(run(&["dispersion", "--n-max", "0", "--out", &out]), 0);
        let (_, header, rows) = read_table(&out);
        assert_eq!(header, ["n", "mu_star"]);
        assert!(rows.is_empty());
    }

    #[test]
    fn default_branch_converges_and_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run(&["branch", "--out", &path(dir.path(), "a")]), 0);
        assert_eq!(run(&["branch", "--out", &path(dir.path(), "b.csv")]), 0);
        let a = fs::read(dir.path().join("a.csv")).unwrap();
        let b = fs::read(dir.path().join("b.csv")).unwrap();
        assert_eq!(a, b);

        let (_, header, rows) = read_table(&path(dir.path(), "a.csv"));
        assert_eq!(header, ["eps", "mu", "residual", "min_graph", "dmean"]);
        assert_eq!(rows.len(), 11);
        assert_eq!(f(&rows[0][0]), 0.0);
        assert!(rows.iter().all(|r| f(&r[2]) < 1e-10 && f(&r[3]) > 0.0));

        let json: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
        assert_eq!(json["mode"], 1);
        assert_eq!(json["points"].as_array().unwrap().len(), 11);
        assert_eq!(json["provenance"]["command"], "branch");
    }

    #[test]
    fn zero_amplitude_branch_is_the_flat_state() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            run(&["branch", "--eps-max", "0", "--out", &path(dir.path(), "z")]),
            0
        );
        let (_, _, rows) = read_table(&path(dir.path(), "z.csv"));
        assert_eq!(rows.len(), 1);
        assert!((f(&rows[0][1]) - critical_mu(1, 1.0, 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn failed_continuation_keeps_partial_files() {
        let dir = tempfile::tempdir().unwrap();
        // Only the flat state reaches a residual of 1e-30.
        let cfg = path(dir.path(), "run.json");
        fs::write(&cfg, r#"{"tol": 1e-30}"#).unwrap();
        assert_eq!(
            run(&["branch", "--config", &cfg, "--out", &path(dir.path(), "p")]),
            2
        );
        let (_, _, rows) = read_table(&path(dir.path(), "p.csv"));
        assert_eq!(rows.len(), 1);
        assert!(dir.path().join("p.json").exists());
    }

    #[test]
    fn spectrum_confirms_instability_along_the_branch() {
        let dir = tempfile::tempdir().unwrap();
        let base = path(dir.path(), "s");
        let args = [
            "branch",
            "--eps-max",
            "0.02",
            "--steps",
            "4",
            "--n-trunc",
            "64",
            "--out",
            &base,
        ];
        assert_eq!(run(&args), 0);
        let out = path(dir.path(), "spec.csv");
        assert_eq!(
            run(&[
                "spectrum",
                "--branch",
                &format!("{base}.json"),
                "--out",
                &out
            ]),
            0
        );
        let (_, header, rows) = read_table(&out);
        assert_eq!(
            header,
            ["eps", "lambda_min", "prediction", "rel_err", "n_negative"]
        );
        assert_eq!(rows.len(), 5);
        assert!(f(&rows[0][1]).abs() < 1e-9);
        assert!(rows[0][3].is_empty());
        for r in &rows[1..] {
            let (lambda, pred) = (f(&r[1]), f(&r[2]));
            assert!(lambda < 0.0 && pred < 0.0);
            assert!(r[4].parse::<usize>().unwrap() >= 1);
            assert!((f(&r[3]) - (lambda - pred).abs() / pred.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_needs_a_branch_file() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run(&["spectrum"]), 4);
        assert_eq!(
            run(&["spectrum", "--branch", &path(dir.path(), "missing.json")]),
            1
        );
    }

    #[test]
    fn region_classes_follow_the_inequalities() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = path(dir.path(), "run.json");
        fs::write(
            &cfg,
            r#"{"h_range": [0.5, 2.0], "mu_range": [0.1, 3.0], "grid": 30}"#,
        )
        .unwrap();
        let out = path(dir.path(), "r.csv");
        assert_eq!(run(&["region", "--config", &cfg, "--out", &out]), 0);
        let (_, header, rows) = read_table(&out);
        assert_eq!(header, ["h", "mu", "cond_w", "cond_h", "class"]);
        assert_eq!(rows.len(), 900);
        let mut seen = std::collections::BTreeSet::new();
        for r in &rows {
            let (h, mu) = (f(&r[0]), f(&r[1]));
            if (mu - h).abs() < 1e-9 || (mu - h.tanh()).abs() < 1e-9 {
                continue;
            }
            let cond_w = mu > h.tanh();
            let cond_h = mu > h;
            assert_eq!(r[2], cond_w.to_string());
            assert_eq!(r[3], cond_h.to_string());
            let class = match (cond_w, cond_h) {
                (true, true) => "both",
                (true, false) => "w_only",
                _ => "none",
            };
            assert_eq!(r[4], class);
            seen.insert(r[4].clone());
        }
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn region_boundaries_are_not_stable() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = path(dir.path(), "run.json");
        let out = path(dir.path(), "r.csv");
        let mu = 1f64.tanh();
        fs::write(
            &cfg,
            format!(r#"{{"h_range": [1.0, 2.0], "mu_range": [{mu:?}, 3.0], "grid": 2}}"#),
        )
        .unwrap();
        assert_eq!(run(&["region", "--config", &cfg, "--out", &out]), 0);
        let (_, _, rows) = read_table(&out);
        assert_eq!(f(&rows[0][1]), mu);
        assert_eq!(
            (rows[0][2].as_str(), rows[0][4].as_str()),
            ("false", "none")
        );

        // The diagonal cells sit on mu = h.
        fs::write(
            &cfg,
            r#"{"h_range": [1.0, 2.0], "mu_range": [1.0, 2.0], "grid": 2}"#,
        )
        .unwrap();
        assert_eq!(run(&["region", "--config", &cfg, "--out", &out]), 0);
        let (_, _, rows) = read_table(&out);
        let diagonal: Vec<_> = rows.iter().filter(|r| f(&r[0]) == f(&r[1])).collect();
        assert_eq!(diagonal.len(), 2);
        for r in diagonal {
            assert_eq!((r[3].as_str(), r[4].as_str()), ("false", "w_only"), "{r:?}");
        }
    }

    #[test]
    fn symbols_table() {
        let dir = tempfile::tempdir().unwrap();
        let out = path(dir.path(), "s.csv");
        assert_eq!(
            run(&["symbols", "--n-max", "3", "--h", "2", "--out", &out]),
            0
        );
        let (_, header, rows) = read_table(&out);
        assert_eq!(header, ["n", "finite_depth", "infinite_depth"]);
        assert_eq!(rows.len(), 7);
        let zero = &rows[3];
        assert_eq!(
            (zero[0].as_str(), f(&zero[1]), f(&zero[2])),
            ("0", 0.5, 0.0)
        );
        assert!((f(&rows[4][1]) - 1.0 / 2f64.tanh()).abs() < 1e-15);
        assert_eq!(f(&rows[0][2]), 3.0);
    }

    #[test]
    fn verify_report_is_deterministic_and_passes() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (path(dir.path(), "a.txt"), path(dir.path(), "b.txt"));
        assert_eq!(
            run(&["verify", "--n-trunc", "32", "--seed", "0x5EED", "--out", &a]),
            0
        );
        assert_eq!(run(&["verify", "--n-trunc", "32", "--out", &b]), 0);
        let a = fs::read_to_string(a).unwrap();
        let b = fs::read_to_string(b).unwrap();
        assert_eq!(a, b);
        let (prov, report) = a.split_once('\n').unwrap();
        assert!(prov.starts_with("# {"));
        assert!(report.starts_with("# verify seed=0x5EED n_trunc=32\n"));
        assert!(report.ends_with("overall PASS\n"));
    }

    #[test]
    fn bad_configuration_exits_with_code_four() {
        let dir = tempfile::tempdir().unwrap();
        for args in [
            &["branch", "--eps-max", "0.5"][..],
            &["branch", "--n-trunc", "96"],
            &["dispersion", "--k", "0"],
            &["verify", "--n-trunc", "1024"],
            &["region", "--grid", "1"],
            &["branch", "--steps", "many"],
            &["unknown"],
        ] {
            assert_eq!(run(args), 4, "{args:?}");
        }
        let cfg = path(dir.path(), "bad.json");
        fs::write(&cfg, "[1, 2]").unwrap();
        assert_eq!(run(&["symbols", "--config", &cfg]), 4);
    }
}
