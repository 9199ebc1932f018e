//! `bates`: price, Greeks, convergence studies, hedge tables and the MC check.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bates_core::analysis::{solve_study, StudySolves};
use bates_core::config::RunConfig;
use bates_core::hedging::{hedge_table, spread_payoff, HedgeReport, ReferenceMode, SpreadSpec};
use bates_core::io::{write_convergence_csv, write_file, write_hedge_csv, write_json, write_payoff_csv, write_surface_csv};
use bates_core::{
    build_grid, compute, evaluate_at, mc_price, solve_pide, Error, Quantity, Result, SchemeKind, SolveReport,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "bates", version, about = "Bates-model PIDE pricer with second- and fourth-order schemes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration; omitted keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    scheme: Option<SchemeKind>,
    /// Mesh size for single solves.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Comma-separated mesh sizes for studies and hedge tables.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    h_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    h_ref: Option<f64>,
    #[arg(long, global = true)]
    quantity: Option<Quantity>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (falls back to BATES_HOC_THREADS, then 1).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for CSV/JSON outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the printed x-direction vega and gamma formulas.
    #[arg(long, global = true)]
    paper_literal_greeks: bool,
    #[arg(long, global = true)]
    spot: Option<f64>,
    #[arg(long, global = true)]
    variance: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve once and report the price at the query point.
    Price {
        /// Write the assembled implicit matrix in coordinate form.
        #[arg(long)]
        dump_operator: bool,
    },
    /// Greek surface and its value at the query point.
    Greeks,
    /// Error norms and fitted orders against the h_ref solution.
    Converge,
    /// Hedge-ratio tables for the two spread examples.
    Hedge {
        #[arg(long, value_enum, default_value_t = Example::Both)]
        example: Example,
        /// Evaluation variance for both examples.
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long)]
        reference: Option<RefArg>,
    },
    /// PIDE price against Monte Carlo; exit 1 if they differ by 3 standard errors or more.
    McCheck {
        #[arg(long)]
        paths: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Example {
    Vega,
    Gamma,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RefArg {
    /// Each scheme against its own h_ref ratio.
    OwnScheme,
    /// Both schemes against the Hoc4 h_ref ratio.
    Hoc4,
}

impl From<RefArg> for ReferenceMode {
    fn from(r: RefArg) -> Self {
        match r {
            RefArg::OwnScheme => ReferenceMode::OwnScheme,
            RefArg::Hoc4 => ReferenceMode::Hoc4,
        }
    }
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.scheme {
        cfg.scheme = s;
    }
    if let Some(h) = c.h {
        cfg.grid.h = h;
    }
    if let Some(l) = &c.h_list {
        cfg.study.h_list = l.clone();
    }
    if let Some(h) = c.h_ref {
        cfg.study.h_ref = h;
    }
    if let Some(q) = c.quantity {
        cfg.study.quantity = q;
    }
    if let Some(s) = c.seed {
        cfg.mc.seed = s;
    }
    if c.paper_literal_greeks {
        cfg.greeks.paper_literal = true;
    }
    if let Some(s) = c.spot {
        cfg.query.spot = s;
    }
    if let Some(v) = c.variance {
        cfg.query.variance = v;
    }
    Ok(cfg)
}

fn threads(c: &Common) -> Result<usize> {
    if let Some(n) = c.threads {
        return if n == 0 { Err(Error::Config("--threads must be at least 1".into())) } else { Ok(n) };
    }
    match std::env::var("BATES_HOC_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("BATES_HOC_THREADS = {v:?} is not a positive integer"))),
        Err(_) => Ok(1),
    }
}

fn out_dir(c: &Common) -> Result<Option<&Path>> {
    match &c.out {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|e| Error::Config(format!("cannot create {}: {e}", d.display())))?;
            Ok(Some(d.as_path()))
        }
        None => Ok(None),
    }
}

/// Rejects query points outside the computational box, naming the bound.
fn check_query(cfg: &RunConfig) -> Result<()> {
    let x = (cfg.query.spot / cfg.contract.strike).ln();
    let y = cfg.query.variance / cfg.model.sigma_v;
    let g = &cfg.grid;
    if x.abs() > g.r1 {
        return Err(Error::Domain(format!("spot {} maps to x = {x:.4}, outside [-R1, R1] = [{}, {}]", cfg.query.spot, -g.r1, g.r1)));
    }
    if y < g.l2 || y > g.r2 {
        return Err(Error::Domain(format!(
            "variance {} maps to y = {y:.4}, outside [L2, R2] = [{}, {}]",
            cfg.query.variance, g.l2, g.r2
        )));
    }
    Ok(())
}

fn warn(rep: &SolveReport) {
    for w in rep.warnings() {
        eprintln!("warning ({} h = {}): {w}", rep.scheme, rep.surface.grid.h());
    }
}

fn single_solve(cfg: &RunConfig) -> Result<SolveReport> {
    let grid = build_grid(&cfg.grid_spec())?;
    let rep = solve_pide(&cfg.model, &cfg.contract, &grid, cfg.scheme, &cfg.solver)?;
    warn(&rep);
    Ok(rep)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialise"));
}

fn cmd_price(cfg: &RunConfig, out: Option<&Path>, dump_operator: bool) -> Result<i32> {
    check_query(cfg)?;
    let rep = single_solve(cfg)?;
    let price = rep.surface.price_at(cfg.query.spot, cfg.query.variance, &cfg.contract, &cfg.model)?;
    let body = json!({
        "scheme": cfg.scheme,
        "spot": cfg.query.spot,
        "variance": cfg.query.variance,
        "strike": cfg.contract.strike,
        "expiry": cfg.contract.expiry,
        "price": price,
        "solve": rep.summary(),
    });
    print_json(&body);
    if let Some(dir) = out {
        write_json(&dir.join("price.json"), &body)?;
        let gs = compute(Quantity::Price, &rep, &cfg.model, &cfg.contract, cfg.greek_mode())?;
        write_file(&dir.join(format!("surface_price_{}.csv", cfg.scheme)), |w| write_surface_csv(w, &gs, &cfg.model))?;
        if dump_operator {
            let grid = build_grid(&cfg.grid_spec())?;
            let mats = bates_core::assemble(cfg.scheme, &cfg.model, &grid)?;
            write_file(&dir.join(format!("operator_{}.txt", cfg.scheme)), |w| {
                use std::io::Write;
                w.write_all(mats.a_impl.to_coordinate_text().as_bytes())?;
                Ok(())
            })?;
        }
    } else if dump_operator {
        return Err(Error::Config("--dump-operator needs --out".into()));
    }
    Ok(0)
}

fn cmd_greeks(cfg: &RunConfig, out: Option<&Path>) -> Result<i32> {
    check_query(cfg)?;
    let rep = single_solve(cfg)?;
    let q = cfg.study.quantity;
    let gs = compute(q, &rep, &cfg.model, &cfg.contract, cfg.greek_mode())?;
    let value = evaluate_at(&gs, cfg.query.spot, cfg.query.variance, &cfg.model)?;
    let body = json!({
        "scheme": cfg.scheme,
        "quantity": q,
        "mode": cfg.greek_mode(),
        "spot": cfg.query.spot,
        "variance": cfg.query.variance,
        "value": value,
        "solve": rep.summary(),
    });
    print_json(&body);
    if let Some(dir) = out {
        write_json(&dir.join(format!("greeks_{q}_{}.json", cfg.scheme)), &body)?;
        write_file(&dir.join(format!("surface_{q}_{}.csv", cfg.scheme)), |w| write_surface_csv(w, &gs, &cfg.model))?;
    }
    Ok(0)
}

fn study(cfg: &RunConfig, scheme: SchemeKind) -> Result<StudySolves> {
    let s = solve_study(scheme, &cfg.study.h_list, cfg.study.h_ref, &cfg.grid_spec(), &cfg.model, &cfg.contract, &cfg.solver)?;
    s.coarse.iter().for_each(|(_, r)| warn(r));
    warn(&s.reference);
    Ok(s)
}

fn cmd_converge(cfg: &RunConfig, out: Option<&Path>) -> Result<i32> {
    let s = study(cfg, cfg.scheme)?;
    let rep = s.report(cfg.study.quantity, &cfg.study_settings())?;
    println!("{} {} vs h_ref = {}", rep.scheme, rep.quantity, rep.h_ref);
    println!("{:>8} {:>14} {:>14}", "h", "eps_l2", "eps_linf");
    for r in &rep.rows {
        println!("{:>8} {:>14.6e} {:>14.6e}", r.h, r.eps_l2, r.eps_linf);
    }
    println!("order: l2 m = {:.3}, linf m = {:.3}", rep.fit_l2.m, rep.fit_linf.m);
    if let Some(dir) = out {
        let stem = format!("convergence_{}_{}", rep.scheme, rep.quantity);
        write_file(&dir.join(format!("{stem}.csv")), |w| write_convergence_csv(w, &rep))?;
        write_json(&dir.join(format!("{stem}.json")), &rep)?;
    }
    Ok(0)
}

fn print_hedge(name: &str, rep: &HedgeReport) {
    println!("{name}: ratio = G_short / G_long, S0 = {}, K_short = {}, K_long = {}, sigma0 = {}", rep.spec.spot, rep.spec.k_short, rep.spec.k_long, rep.spec.sigma0);
    println!("{:>9} {:>6} {:>14} {:>12}", "scheme", "h", "ratio", "% error");
    for r in &rep.rows {
        println!("{:>9} {:>6} {:>14.8} {:>12.4}", r.scheme.to_string(), r.h, r.ratio, r.pct_error);
    }
    if let Some(v) = rep.verdict() {
        let side = if v.underlying_qty < 0.0 { "sell" } else { "buy" };
        println!(
            "write spread: net delta {:.6}, {side} {:.6} units of the underlying, net theta {:.6} -> {}",
            v.net_delta,
            v.underlying_qty.abs(),
            v.net_theta,
            if v.recommend { "recommend" } else { "do not recommend" }
        );
    }
}

fn cmd_hedge(cfg: &RunConfig, out: Option<&Path>, example: Example, sigma0: Option<f64>, reference: Option<ReferenceMode>) -> Result<i32> {
    let reference = reference.unwrap_or(cfg.hedge.reference);
    let mut specs: Vec<(&str, SpreadSpec)> = Vec::new();
    if example != Example::Gamma {
        specs.push(("example1", cfg.hedge.example1));
    }
    if example != Example::Vega {
        specs.push(("example2", cfg.hedge.example2));
    }
    for (_, s) in specs.iter_mut() {
        if let Some(v) = sigma0 {
            s.sigma0 = v;
        }
        if (s.expiry - cfg.contract.expiry).abs() > 1e-12 {
            return Err(Error::Config("hedge expiries must equal contract.expiry (one solve serves every leg)".into()));
        }
        s.validate()?;
    }
    let studies = SchemeKind::ALL.iter().map(|&sc| study(cfg, sc)).collect::<Result<Vec<_>>>()?;
    let mut all = Vec::new();
    for (name, spec) in &specs {
        let rep = hedge_table(&studies, spec, cfg.greek_mode(), reference)?;
        print_hedge(name, &rep);
        if let Some(dir) = out {
            write_file(&dir.join(format!("hedge_{name}.csv")), |w| write_hedge_csv(w, &rep))?;
            let ratio = rep.references.first().map_or(1.0, |r| r.ratio);
            let lo = spec.k_short.min(spec.k_long) * 0.5;
            let hi = spec.k_short.max(spec.k_long) * 1.5;
            let spots: Vec<f64> = (0..=200).map(|n| lo + (hi - lo) * n as f64 / 200.0).collect();
            write_file(&dir.join(format!("payoff_{name}.csv")), |w| write_payoff_csv(w, &spread_payoff(spec, ratio, &spots)))?;
        }
        all.push((name.to_string(), rep));
    }
    if let Some(dir) = out {
        let map: serde_json::Map<String, serde_json::Value> =
            all.iter().map(|(n, r)| (n.clone(), serde_json::to_value(r).expect("report serialises"))).collect();
        write_json(&dir.join("hedge.json"), &map)?;
    }
    Ok(0)
}

fn cmd_mc_check(cfg: &RunConfig, out: Option<&Path>, paths: Option<usize>) -> Result<i32> {
    let mut mc = cfg.mc;
    if let Some(n) = paths {
        mc.n_paths = n;
    }
    mc.validate()?;
    check_query(cfg)?;
    let rep = single_solve(cfg)?;
    let pide = rep.surface.price_at(cfg.query.spot, cfg.query.variance, &cfg.contract, &cfg.model)?;
    let m = mc_price(&cfg.model, &cfg.contract, cfg.query.spot, cfg.query.variance, &mc)?;
    let z = m.z_score(pide);
    let pass = z < 3.0;
    let body = json!({
        "scheme": cfg.scheme,
        "h": cfg.grid.h,
        "spot": cfg.query.spot,
        "variance": cfg.query.variance,
        "pide_price": pide,
        "mc_price": m.price,
        "mc_stderr": m.stderr,
        "n_paths": m.n_paths,
        "n_steps": mc.n_steps,
        "seed": mc.seed,
        "z": z,
        "pass": pass,
    });
    print_json(&body);
    if let Some(dir) = out {
        write_json(&dir.join("mc_check.json"), &body)?;
    }
    Ok(if pass { 0 } else { 1 })
}

fn run(cli: &Cli) -> Result<i32> {
    let cfg = load_config(&cli.common)?;
    cfg.validate()?;
    let n = threads(&cli.common)?;
    let out = out_dir(&cli.common)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.cmd {
        Cmd::Price { dump_operator } => cmd_price(&cfg, out, *dump_operator),
        Cmd::Greeks => cmd_greeks(&cfg, out),
        Cmd::Converge => cmd_converge(&cfg, out),
        Cmd::Hedge { example, sigma0, reference } => cmd_hedge(&cfg, out, *example, *sigma0, reference.map(Into::into)),
        Cmd::McCheck { paths } => cmd_mc_check(&cfg, out, *paths),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
