use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rectigeo::expr::{eval_jet, parse};
use rectigeo::runner::{run, RunOptions};
use rectigeo::scene::{builtin, builtin_names, load_scene, CheckName, Scene};
use rectigeo::GeoError;

#[derive(Parser)]
#[command(
    name = "rectigeo",
    version,
    about = "Numerical checks for torse-forming axes and rectifying submanifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a scene file or a built-in scene (builtin:NAME).
    Check {
        scene: String,
        /// Comma separated check names; defaults to the scene's list.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        points: Option<usize>,
        /// Also write the machine report to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// List the embedded scenes.
    ListBuiltins,
    /// Evaluate an expression and its derivatives at a point.
    Eval {
        expr: String,
        /// Assignments such as x1=0.5,x2=1
        #[arg(long, value_delimiter = ',')]
        at: Vec<String>,
        #[arg(long, default_value_t = 1)]
        order: usize,
    },
}

fn load(arg: &str) -> Result<Scene, GeoError> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return builtin(name);
    }
    let text = std::fs::read_to_string(arg).map_err(|e| GeoError::Schema {
        path: arg.to_string(),
        detail: e.to_string(),
    })?;
    load_scene(&text)
}

fn check(
    scene: &str,
    checks: Option<Vec<String>>,
    seed: Option<u64>,
    points: Option<usize>,
    json: Option<PathBuf>,
) -> Result<i32, GeoError> {
    let scene = load(scene)?;
    let checks = checks
        .map(|names| {
            names
                .iter()
                .map(|n| {
                    CheckName::from_name(n.trim()).ok_or_else(|| GeoError::Schema {
                        path: "--checks".into(),
                        detail: format!("unknown check '{n}'"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let report = run(
        &scene,
        &RunOptions {
            checks,
            seed,
            points,
        },
    );
    print!("{}", report.render_table());
    if let Some(path) = json {
        std::fs::write(&path, report.to_json() + "\n").map_err(|e| GeoError::Schema {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
    }
    Ok(report.exit_code())
}

fn eval(src: &str, at: &[String], order: usize) -> Result<i32, GeoError> {
    let mut names = Vec::new();
    let mut point = Vec::new();
    for a in at {
        let (k, v) = a.split_once('=').ok_or_else(|| GeoError::Schema {
            path: "--at".into(),
            detail: format!("expected name=value, got '{a}'"),
        })?;
        let v: f64 = v.trim().parse().map_err(|_| GeoError::Schema {
            path: format!("--at.{k}"),
            detail: format!("'{v}' is not a number"),
        })?;
        names.push(k.trim().to_string());
        point.push(v);
    }
    let expr = parse(src, &names)?;
    println!("{expr}");
    let jet = eval_jet(&expr, &point, order.min(3))?;
    println!("value = {:.15e}", jet.value());
    if order >= 1 {
        for (i, n) in names.iter().enumerate() {
            println!("d/d{n} = {:.15e}", jet.d1(i));
        }
    }
    if order >= 2 {
        for i in 0..names.len() {
            for j in i..names.len() {
                println!("d2/d{}d{} = {:.15e}", names[i], names[j], jet.d2(i, j));
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check {
            scene,
            checks,
            seed,
            points,
            json,
        } => check(&scene, checks, seed, points, json),
        Command::ListBuiltins => {
            for n in builtin_names() {
                println!("{n}");
            }
            Ok(0)
        }
        Command::Eval { expr, at, order } => eval(&expr, &at, order),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
