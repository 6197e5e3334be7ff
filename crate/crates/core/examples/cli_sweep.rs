//! Drive the command-line pipeline from code: a small sweep written to a temp directory.

use dq_handover::cli::{execute, Command, RunConfig};

fn main() {
    let out = std::env::temp_dir().join("dq_handover_sweep_example");
    let mut rc = RunConfig::new(Command::Sweep, &out);
    rc.episodes = Some(10);
    rc.overrides = vec!["sweep.metrics=dq,matrix".into(), "sweep.objects=cylinder".into()];
    match execute(&rc) {
        Ok(table) => {
            print!("{table}");
            println!("outputs in {}", out.display());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
