use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use pathway_core::peg::LinearPegParams;
use pathway_core::sim::{run_batch, write_events_csv, ScenarioConfig, ScenarioOutput, SimRng};
use pathway_core::{
    compute_peg_linear, execute_intervention, plan_intervention, plan_paper_approx, read_factor_csv, Amount, Direction,
    InterventionReport, LinearPegModel, LpHolding, Method, PoolState, TriggerPolicy,
};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const THREADS_ENV: &str = "PATHWAY_SIM_THREADS";

const PAPER_DEMO: &str = include_str!("../../../scenarios/paper_demo.json");

pub const REPORT_CSV_HEADER: &str = "method,direction,price_before,target_price,realized_price,lp_burned,\
extracted_g,extracted_u,swap_out,final_g,final_u,dao_delta_g,dao_delta_u,price_error,liquidity_value_error,\
quote_reserve_error";

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    ScenarioConfig::from_json(&read_text(path)?).map_err(|e| CliError::config(path, e))
}

pub fn validate(config: &Path, out: &mut impl Write) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    writeln!(
        out,
        "{}: ok ({} agents, {} steps)",
        config.display(),
        cfg.agents.len(),
        cfg.run.steps
    )
    .map_err(stdout_err)?;
    Ok(())
}

/// Parses `<amount>u,<amount>g` in either order.
pub fn parse_pool_spec(spec: &str) -> Result<(Amount, Amount), String> {
    let (mut g, mut u) = (None, None);
    for part in spec.split(',') {
        let part = part.trim();
        let (num, side) = part.split_at(part.len().saturating_sub(1));
        let amount = num
            .trim()
            .parse::<Amount>()
            .map_err(|e| format!("pool spec {spec:?}: {part:?}: {e}"))?;
        let slot = match side.to_ascii_lowercase().as_str() {
            "g" => &mut g,
            "u" => &mut u,
            _ => return Err(format!("pool spec {spec:?}: {part:?} must end in 'u' or 'g'")),
        };
        if slot.replace(amount).is_some() {
            return Err(format!("pool spec {spec:?}: side given twice"));
        }
    }
    match (g, u) {
        (Some(g), Some(u)) => Ok((g, u)),
        _ => Err(format!("pool spec {spec:?}: expected <amount>u,<amount>g")),
    }
}

pub fn parse_peg(text: &str) -> Result<f64, String> {
    let peg: f64 = text.parse().map_err(|e| format!("{text:?}: {e}"))?;
    if peg > 0.0 && peg.is_finite() {
        Ok(peg)
    } else {
        Err(format!("{text:?}: peg must be a positive finite price"))
    }
}

/// Plans and executes one intervention with the DAO owning the whole pool.
/// Returns `None` when the pool already sits on the peg.
pub fn intervene_once(
    g: Amount,
    u: Amount,
    fee_bps: u32,
    peg: f64,
    method: Method,
) -> Result<Option<InterventionReport>, CliError> {
    let mut pool = PoolState::seeded(g, u, fee_bps).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut dao = LpHolding::new("dao", pool.lp_supply());
    let plan = match method {
        Method::Exact => {
            let policy = TriggerPolicy {
                deviation_threshold: 0.0,
                min_interval: 0,
                method,
            };
            plan_intervention(&pool, peg, &dao, &policy)?
        }
        Method::PaperApprox => Some(plan_paper_approx(&pool, peg)?).filter(|p| p.direction != Direction::None),
    };
    let Some(plan) = plan else {
        return Ok(None);
    };
    Ok(Some(execute_intervention(&mut pool, &plan, &mut dao)?))
}

pub fn report_csv_row(r: &InterventionReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.method,
        r.direction,
        r.before.spot_price().unwrap_or(f64::NAN),
        r.target_price,
        r.realized_price,
        r.lp_burned,
        r.extracted.0,
        r.extracted.1,
        r.swap_out,
        r.realized_final.reserve_g(),
        r.realized_final.reserve_u(),
        r.dao_balance_change.g,
        r.dao_balance_change.u,
        r.price_error,
        r.liquidity_value_error,
        r.quote_reserve_error
    )
}

fn write_pool(out: &mut impl Write, label: &str, pool: &PoolState) -> io::Result<()> {
    let price = pool.spot_price().unwrap_or(f64::NAN);
    let value = pool.liquidity_value().map(|v| v.to_string()).unwrap_or_default();
    writeln!(
        out,
        "{label:<8} {} U, {} G, price {price}, liquidity value {value} U",
        pool.reserve_u(),
        pool.reserve_g()
    )
}

pub fn write_report(out: &mut impl Write, r: &InterventionReport) -> io::Result<()> {
    writeln!(out, "method   {}", r.method)?;
    writeln!(out, "direction {}", r.direction)?;
    write_pool(out, "before", &r.before)?;
    write_pool(out, "after", &r.realized_final)?;
    writeln!(out, "lp burned {}", r.lp_burned)?;
    writeln!(out, "extracted {} G, {} U", r.extracted.0, r.extracted.1)?;
    writeln!(out, "swap out {}", r.swap_out)?;
    writeln!(
        out,
        "dao gain {} G, {} U",
        r.dao_balance_change.g, r.dao_balance_change.u
    )?;
    writeln!(out, "target   {}", r.target_price)?;
    writeln!(out, "realized {}", r.realized_price)?;
    writeln!(out, "price_error {:e}", r.price_error)?;
    writeln!(out, "liquidity_value_error {:e}", r.liquidity_value_error)?;
    writeln!(out, "quote_reserve_error {:e}", r.quote_reserve_error)?;
    if r.method == Method::PaperApprox && r.price_error > 0.0 {
        let side = if r.realized_price < r.target_price {
            "undershoots"
        } else {
            "overshoots"
        };
        writeln!(out, "residual {} ({side} the peg)", r.realized_price - r.target_price)?;
    }
    writeln!(out)?;
    writeln!(out, "{REPORT_CSV_HEADER}")?;
    writeln!(out, "{}", report_csv_row(r))
}

fn stdout_err(e: io::Error) -> CliError {
    if e.kind() == io::ErrorKind::BrokenPipe {
        std::process::exit(crate::error::exit::OK);
    }
    CliError::Io(format!("stdout: {e}"))
}

pub fn intervene(
    pool_spec: &str,
    peg: f64,
    method: Method,
    fee_bps: u32,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let (g, u) = parse_pool_spec(pool_spec).map_err(CliError::Usage)?;
    match intervene_once(g, u, fee_bps, peg, method)? {
        Some(report) => write_report(out, &report).map_err(stdout_err),
        None => writeln!(out, "no intervention needed").map_err(stdout_err),
    }
}

pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV}={v:?}: expected a positive integer"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files of one run, rendered in memory so digests match the bytes on disk.
fn render(output: &ScenarioOutput) -> Vec<(&'static str, Vec<u8>)> {
    let mut events = Vec::new();
    write_events_csv(&output.events, &mut events).expect("write to vec");
    let mut series = Vec::new();
    output.write_series(&mut series).expect("write to vec");
    let mut summary = Vec::new();
    writeln!(summary, "seed={}", output.seed).expect("write to vec");
    output.metrics.write_flat(&mut summary).expect("write to vec");
    vec![("events.csv", events), ("series.csv", series), ("summary.txt", summary)]
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn run(config_path: &Path, seed: Option<u64>, out_dir: &Path, out: &mut impl Write) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let threads = threads_from_env()?;
    let base = seed.unwrap_or(config.run.seed);
    let seeds: Vec<u64> = (0..config.run.replicates)
        .map(|i| base.wrapping_add(u64::from(i)))
        .collect();
    let results = run_batch(&config, &seeds, threads)?;

    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut manifest = format!(
        "config={}\nseed={base}\nreplicates={}\nout={}\n",
        config_path.display(),
        config.run.replicates,
        out_dir.display()
    );
    let nested = seeds.len() > 1;
    for result in results {
        let output = result?;
        let dir: PathBuf = if nested {
            out_dir.join(format!("seed-{}", output.seed))
        } else {
            out_dir.to_path_buf()
        };
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        for (name, bytes) in render(&output) {
            write_file(&dir.join(name), &bytes)?;
            let rel = if nested {
                format!("seed-{}/{name}", output.seed)
            } else {
                name.to_string()
            };
            manifest.push_str(&format!("sha256:{rel}={}\n", sha256_hex(&bytes)));
        }
        let m = &output.metrics;
        writeln!(
            out,
            "seed {}: {} steps, {} interventions, {} aborted, final price {} (peg {}), rmse {}",
            output.seed,
            m.steps,
            m.interventions,
            m.aborted_interventions,
            m.final_price,
            m.final_peg,
            m.peg_tracking_rmse
        )
        .map_err(stdout_err)?;
    }
    write_file(&out_dir.join("manifest.txt"), manifest.as_bytes())?;
    writeln!(out, "wrote {}", out_dir.display()).map_err(stdout_err)?;
    Ok(())
}

/// Emits `t,peg` for `t` in `[from, to)`.
pub fn peg(
    factors_path: &Path,
    model_path: &Path,
    from: i64,
    to: i64,
    seed: u64,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let model_text = read_text(model_path)?;
    let params: LinearPegParams =
        serde_json::from_str(&model_text).map_err(|e| CliError::Parse(format!("{}: {e}", model_path.display())))?;
    let model =
        LinearPegModel::new(params).map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", model_path.display())))?;
    let file = fs::File::open(factors_path).map_err(|e| CliError::io(factors_path, e))?;
    let factors = read_factor_csv(file).map_err(|e| CliError::from(e).prefixed(factors_path))?;
    for w in &model.params().weights {
        if !factors.iter().any(|s| s.factor_id == w.factor_id) {
            return Err(CliError::ConfigInvalid(format!(
                "{}: missing factor {} referenced by weights",
                factors_path.display(),
                w.factor_id
            )));
        }
    }
    let mut rng = SimRng::new(seed).peg;
    let mut text = String::from("t,peg\n");
    for t in from..to.max(from) {
        let p = compute_peg_linear(&model, &factors, t, &mut rng)?;
        text.push_str(&format!("{t},{p}\n"));
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

pub fn demo(out: &mut impl Write) -> Result<(), CliError> {
    let config =
        ScenarioConfig::from_json(PAPER_DEMO).map_err(|e| CliError::config(Path::new("paper_demo.json"), e))?;
    let g = config.pool.reserve_g;
    let u = config.pool.reserve_u;
    let peg = match config.peg_model {
        pathway_core::sim::PegModelConfig::Constant { price } => price,
        _ => unreachable!("demo peg is constant"),
    };
    for method in [Method::Exact, Method::PaperApprox] {
        writeln!(out, "== {u} U, {g} G to peg {peg}, {method} ==").map_err(stdout_err)?;
        if let Some(report) = intervene_once(g, u, config.pool.fee_bps, peg, method)? {
            write_report(out, &report).map_err(stdout_err)?;
        }
        writeln!(out).map_err(stdout_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_spec_forms() {
        let (g, u) = parse_pool_spec("20u,10g").unwrap();
        assert_eq!((g, u), (Amount::from_tokens(10), Amount::from_tokens(20)));
        assert_eq!(parse_pool_spec("10G, 20U").unwrap(), (g, u));
        assert!(parse_pool_spec("20u").is_err());
        assert!(parse_pool_spec("20u,10u").is_err());
        assert!(parse_pool_spec("20x,10g").is_err());
        assert!(parse_pool_spec("-1u,10g").is_err());
    }

    #[test]
    fn peg_parsing() {
        assert_eq!(parse_peg("3"), Ok(3.0));
        assert!(parse_peg("0").is_err());
        assert!(parse_peg("nan").is_err());
    }
}
