use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use growthlab::experiment::{
    appendix_summary, check_rate, evaluate_scenario, shipped_scenario, shipped_scenarios, write_artifacts,
    ExperimentError, Scenario, OUT_DIR_ENV, SCENARIO_KEYS,
};
use growthlab::growth_rates::{RateSpec, CATALOG_NAMES};
use growthlab::representations::{run_suite, SuiteOptions};

/// Exit status when every verdict passes.
const EXIT_PASS: u8 = 0;
/// Exit status when the run completed but a verdict failed.
const EXIT_FAIL: u8 = 1;
/// Exit status for configuration and runtime errors.
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "growthlab", version, about = "Sobolev-norm growth experiments for perturbed quantum harmonic oscillators")]
#[command(after_help = "Exit status: 0 when every verdict passes, 1 when a verdict fails, 2 on usage or runtime errors.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV files and verdict report.
    #[command(after_help = format!("Scenario keys (flat `key = value` file or JSON object):\n{SCENARIO_KEYS}"))]
    Simulate {
        /// Scenario file, or the name of a shipped scenario.
        config: String,
        /// Output directory [default: $GROWTHLAB_OUT_DIR, else the current directory]
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Class-M, support-condition and hypothesis reports for a catalog rate.
    CheckRate {
        /// Catalog name.
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(CATALOG_NAMES))]
        name: String,
        /// Family parameters.
        #[arg(allow_negative_numbers = true)]
        params: Vec<f64>,
        /// End of the sampled horizon.
        #[arg(long, default_value_t = 1e4)]
        horizon: f64,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Randomized checks of the Schrödinger and metaplectic representations.
    MetaplecticTest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random matrices drawn.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long)]
        json: bool,
    },
    /// Band checks of the integrals behind linear growth under forcing.
    AppendixIntegrals {
        /// Catalog name.
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(CATALOG_NAMES))]
        name: String,
        #[arg(allow_negative_numbers = true)]
        params: Vec<f64>,
        /// End of the sampled horizon.
        #[arg(long)]
        horizon: f64,
        /// Sampling interval.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Samples start at t0 + window_offset.
        #[arg(long, default_value_t = 10.0)]
        window_offset: f64,
        #[arg(long, default_value_t = 1e-10)]
        quad_tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Print the shipped scenario catalog.
    ListScenarios,
}

fn status(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn exit_for(passed: bool) -> u8 {
    if passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn load_scenario(config: &str) -> Result<Scenario, ExperimentError> {
    let path = PathBuf::from(config);
    if path.is_file() {
        let text = std::fs::read_to_string(&path).map_err(|e| ExperimentError::Config(format!("{config}: {e}")))?;
        return Scenario::parse(&text);
    }
    shipped_scenario(config)
        .ok_or_else(|| ExperimentError::Config(format!("{config} is neither a file nor a shipped scenario")))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, ExperimentError> {
    serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Output(e.to_string()))
}

fn simulate(config: &str, out_dir: Option<PathBuf>) -> Result<u8, ExperimentError> {
    let scenario = load_scenario(config)?;
    let dir = out_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let run = evaluate_scenario(&scenario)?;
    for path in write_artifacts(&run, &dir)? {
        println!("wrote {}", path.display());
    }
    let report = &run.report;
    for v in &report.verdicts {
        match v.bound {
            Some(bound) => println!("{} {} {:.6e} (bound {bound:e})", status(v.passed), v.name, v.value),
            None => println!("{} {} {:.6e} (finite)", status(v.passed), v.name, v.value),
        }
    }
    println!("scenario {}: {}", scenario.name, status(report.passed));
    Ok(exit_for(report.passed))
}

fn rate_spec(name: String, params: Vec<f64>) -> RateSpec {
    RateSpec { name, params, t0: None }
}

fn check(name: String, params: Vec<f64>, horizon: f64, json: bool) -> Result<u8, ExperimentError> {
    let report = check_rate(&rate_spec(name, params), horizon)?;
    if json {
        println!("{}", to_json(&report)?);
    } else {
        let c = &report.class_m;
        println!("rate {} (t0 = {}, horizon = {})", report.rate_label, report.t0, report.horizon);
        for (flag, ok) in [
            ("inf_positive", c.inf_positive),
            ("non_decreasing", c.non_decreasing),
            ("tends_to_infinity", c.tends_to_infinity),
            ("ratio_to_zero", c.ratio_to_zero),
            ("ratio_monotone", c.ratio_monotone),
        ] {
            println!("  {} {flag}", status(ok));
        }
        println!("class M: {}", status(report.in_class_m));
        println!("support condition: {} (sup t f'/f = {:.6})", status(report.support_holds), report.support.kappa_bound);
        let h = &report.hypotheses;
        println!("hypotheses: sup|f'/f| = {:.6e}, sup|C2| = {:.6e}, sup|C3| = {:.6e}", h.sup_c1, h.sup_c2, h.sup_c3);
        println!("perturbation tail sup = {:.6e}", report.decay.sup_tail);
    }
    Ok(exit_for(report.in_class_m))
}

fn metaplectic(seed: u64, samples: usize, json: bool) -> Result<u8, ExperimentError> {
    let report = run_suite(&SuiteOptions { seed, samples, ..SuiteOptions::default() })
        .map_err(|e| ExperimentError::Output(format!("representations: {e}")))?;
    if json {
        println!("{}", to_json(&report)?);
    } else {
        println!("seed {seed}, {samples} matrices");
        println!("group law      {:.3e}", report.group_law);
        println!("inverse        {:.3e}", report.inverse);
        println!("isometry       {:.3e}", report.isometry);
        println!("unitarity      {:.3e}", report.unitarity);
        println!("conjugation    {:.3e}", report.conjugation);
        println!("cross-branch   {:.3e} over {} matrices", report.cross_branch, report.cross_branch_cases);
        println!("norm ratio     [{:.6}, {:.6}]", report.norm_ratio.min, report.norm_ratio.max);
        println!("shifted ratio  [{:.6}, {:.6}]", report.shifted_ratio.min, report.shifted_ratio.max);
        println!("metaplectic suite: {}", status(report.passed()));
    }
    Ok(exit_for(report.passed()))
}

fn appendix(
    name: String,
    params: Vec<f64>,
    horizon: f64,
    step: f64,
    window_offset: f64,
    quad_tol: f64,
    json: bool,
) -> Result<u8, ExperimentError> {
    let summary = appendix_summary(&rate_spec(name, params), horizon, window_offset, step, quad_tol)?;
    if json {
        println!("{}", to_json(&summary)?);
    } else {
        println!("rate {} on [{}, {horizon}]", summary.rate_label, summary.window_start);
        for w in [&summary.half, &summary.full] {
            println!(
                "  up to {:.1}: I1 band [{:.6}, {:.6}], sup |I2|/f^(1/2) = {:.6}, sup |I3| = {:.6}",
                w.t_end, w.i1_min, w.i1_max, w.i2_sup, w.i3_sup
            );
        }
        println!(
            "horizon-doubling drift: I1 {:.2}%, I2 {:.2}%, I3 {:.2}%",
            100.0 * summary.drift[0],
            100.0 * summary.drift[1],
            100.0 * summary.drift[2]
        );
        println!("appendix integrals: {}", status(summary.passed));
    }
    Ok(exit_for(summary.passed))
}

fn list() -> Result<u8, ExperimentError> {
    for s in shipped_scenarios() {
        let params = s.params.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
        let orders = s.s.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
        println!(
            "{:<20} rate={}({params}) a={} s={orders} duration={}",
            s.name,
            s.rate,
            s.a,
            s.duration.unwrap_or_default()
        );
    }
    Ok(EXIT_PASS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out_dir } => simulate(&config, out_dir),
        Command::CheckRate { name, params, horizon, json } => check(name, params, horizon, json),
        Command::MetaplecticTest { seed, samples, json } => metaplectic(seed, samples, json),
        Command::AppendixIntegrals { name, params, horizon, step, window_offset, quad_tol, json } => {
            appendix(name, params, horizon, step, window_offset, quad_tol, json)
        }
        Command::ListScenarios => list(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
