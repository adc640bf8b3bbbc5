use std::process::ExitCode;

use clap::Parser;

use vbarms_cli::{
    compress_cmd, convert_cmd, emit_report, gen_cmd, report::format_float, run, Cli, Command,
};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(cfg) => match run(cfg) {
            Ok(report) => {
                println!(
                    "{}: n={} av_bd={:.2}% its={} converged={} relres={} mem={:.3} time={:.3}s",
                    report.matrix,
                    report.n,
                    100.0 * report.av_bd,
                    report.iterations,
                    report.converged,
                    format_float(report.final_relres),
                    report.memory_ratio,
                    report.total_time
                );
                if let Some(path) = &cfg.report {
                    if let Err(e) = emit_report(&report, cfg.format, path) {
                        eprintln!("error: report: {}: {e}", path.display());
                        return ExitCode::FAILURE;
                    }
                }
                if !report.converged {
                    eprintln!(
                        "error: solve: no convergence after {} iterations",
                        report.iterations
                    );
                    return ExitCode::from(2);
                }
                return ExitCode::SUCCESS;
            }
            Err(e) => Err(e),
        },
        Command::Compress(args) => compress_cmd(args),
        Command::Gen(args) => gen_cmd(args),
        Command::Convert(args) => convert_cmd(args),
    };
    match result {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
