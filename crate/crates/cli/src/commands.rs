use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use quantbd_core::channel::{gaussian_matrix, rng_stream, Purpose};
use quantbd_core::costmodel::{adc_power_mw, cost_report, CostKind};
use quantbd_core::harness::{
    dump_channels, failure_fraction, format_sig, run_scenario_with, write_csv, ChannelSource, ScenarioConfig,
};
use quantbd_core::poweralloc::{full_resolution_objective, truncated_objective, AllocationProblem};
use quantbd_core::quantizer::{build_quantizer, per_dimension_std, verify_bussgang, Resolution};
use quantbd_core::rates::{db_to_linear, snr_max_db};
use quantbd_core::registry::Registry;
use quantbd_core::Error;

use crate::table::Table;
use crate::{AllocArgs, Cli, Command, CostArgs, DeltaTableArgs, SimulateArgs, VerifyArgs};

const FAILURE_LIMIT: f64 = 0.10;
const NUMERICAL_FAILURE: u8 = 3;

pub fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::DeltaTable(a) => finish(cli, delta_table(a)?),
        Command::Alloc(a) => alloc(cli, a),
        Command::Cost(a) => cost(cli, a),
        Command::VerifyBussgang(a) => finish(cli, verify(cli, a)?),
    }
}

fn finish(cli: &Cli, table: Table) -> Result<ExitCode> {
    print!("{}", table.render());
    if let Some(path) = &cli.out {
        table.save_csv(path)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<ExitCode> {
    let path = &args.config;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ScenarioConfig::from_json(&text).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &args.dump_channels {
        let n = dump_channels(&cfg, dir)?;
        eprintln!("wrote {n} channel files to {}", dir.display());
        return Ok(ExitCode::SUCCESS);
    }
    let source = args.load_channels.clone().map(ChannelSource::Directory).unwrap_or_default();
    let results = run_scenario_with(&cfg, &Registry::with_defaults(), &source)?;
    match &cli.out {
        Some(p) => write_csv(File::create(p).with_context(|| format!("creating {}", p.display()))?, &results)?,
        None => write_csv(io::stdout().lock(), &results)?,
    }
    let fallbacks: usize = results.iter().map(|r| r.fallbacks).sum();
    if fallbacks > 0 {
        eprintln!("note: {fallbacks} allocations fell back to classical waterfilling");
    }
    let failed = failure_fraction(&results);
    if failed > FAILURE_LIMIT {
        eprintln!("error: {:.1}% of cell evaluations failed numerically", 100.0 * failed);
        return Ok(ExitCode::from(NUMERICAL_FAILURE));
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_bits_list(spec: &str) -> Result<Vec<u32>> {
    let spec = spec.trim();
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u32 = lo.trim().parse().with_context(|| format!("bad range start in {spec:?}"))?;
        let hi: u32 =
            hi.trim().trim_start_matches('=').parse().with_context(|| format!("bad range end in {spec:?}"))?;
        if lo > hi {
            return Err(Error::Config(format!("empty bit range {spec:?}")).into());
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<u32>().map_err(|_| Error::Config(format!("bad bit depth {s:?}")).into()))
        .collect()
}

fn delta_table(args: &DeltaTableArgs) -> Result<Table> {
    let mut header: Vec<String> =
        ["bits", "levels", "step_over_sigma", "alpha", "delta", "distortion"].map(String::from).into();
    header.extend(args.nu.iter().map(|n| format!("snr_max_db_nu{n}")));
    let mut table = Table::new(header);
    let p_total = args.nu.first().copied().unwrap_or(1) as f64;
    for b in parse_bits_list(&args.bits)? {
        let q = build_quantizer(Resolution::Bits(b), args.nb, p_total)?;
        let mut row = vec![
            b.to_string(),
            q.j_levels.to_string(),
            format!("{:.6}", q.gamma / per_dimension_std(args.nb, p_total)),
            format!("{:.6}", q.alpha),
            format!("{:.4}", q.delta),
            format_sig(1.0 - q.delta * q.delta),
        ];
        row.extend(args.nu.iter().map(|&n| format!("{:.4}", snr_max_db(n, q.delta))));
        table.push(row);
    }
    Ok(table)
}

fn read_gains(spec: &str) -> Result<Vec<f64>> {
    let text = if Path::new(spec).is_file() {
        std::fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?
    } else {
        spec.to_string()
    };
    let gains = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("bad gain {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if gains.is_empty() {
        bail!(Error::Config("no gains given".into()));
    }
    Ok(gains)
}

fn alloc(cli: &Cli, args: &AllocArgs) -> Result<ExitCode> {
    let phi2 = read_gains(&args.phi2)?;
    let resolution: Resolution = args.bits.parse()?;
    let nu = args.nu.unwrap_or(phi2.len());
    let p_total = args.p_total.unwrap_or(nu as f64);
    let q = build_quantizer(resolution, args.nb, p_total)?;
    let registry = Registry::with_defaults();
    let allocator = registry.allocator(&args.allocator)?;
    let problem = AllocationProblem {
        phi2: phi2.clone(),
        nu,
        snr: db_to_linear(args.snr_db),
        delta: if allocator.quantization_aware() { q.delta } else { 1.0 },
        p_total,
    };
    let a = allocator.allocate(&problem)?;
    let mut table = Table::new(["stream", "phi2", "omega"]);
    for (i, (g, w)) in phi2.iter().zip(&a.omega).enumerate() {
        table.push(vec![i.to_string(), format_sig(*g), format_sig(*w)]);
    }
    print!("{}", table.render());
    let scored = AllocationProblem { delta: q.delta, ..problem.clone() };
    let objective = if q.is_full() {
        Ok(full_resolution_objective(&scored, &a.omega))
    } else {
        truncated_objective(&scored, &a.omega)
    };
    println!("allocator {}  delta {:.6}  mu {}", allocator.name(), q.delta, format_sig(a.mu));
    println!("active {}/{}  total {}  fallback {}", a.active, phi2.len(), format_sig(a.total()), a.fallback_used);
    match objective {
        Ok(v) => println!("objective {} bits/channel use", format_sig(v)),
        Err(e) => println!("objective unavailable: {e}"),
    }
    if let Some(path) = &cli.out {
        table.save_csv(path)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cost(cli: &Cli, args: &CostArgs) -> Result<ExitCode> {
    let mut flops = Table::new(["precoder", "flops", "power_alloc_order"]);
    for kind in CostKind::ALL {
        let r = cost_report(kind, args.nb, args.nu, args.nj, args.bits, args.two_dacs)?;
        flops.push(vec![kind.to_string(), format!("{:.0}", r.flops), format!("O({})", r.pa_flops_order)]);
    }
    let mut power = Table::new(["bits", "dac_mw", "adc_mw", "array_dac_mw"]);
    let mut csv =
        Table::new(["precoder", "bits", "flops", "dac_power_mw", "total_dac_power_mw", "two_dacs_per_antenna"]);
    for b in 2..=12 {
        let r = cost_report(CostKind::CqaBd, args.nb, args.nu, args.nj, b, args.two_dacs)?;
        power.push(vec![
            b.to_string(),
            format_sig(r.dac_power_mw),
            format_sig(adc_power_mw(b)),
            format_sig(r.total_dac_power_mw),
        ]);
        for kind in CostKind::ALL {
            let r = cost_report(kind, args.nb, args.nu, args.nj, b, args.two_dacs)?;
            csv.push(vec![
                kind.to_string(),
                b.to_string(),
                format!("{:.0}", r.flops),
                format_sig(r.dac_power_mw),
                format_sig(r.total_dac_power_mw),
                r.two_dacs_per_antenna.to_string(),
            ]);
        }
    }
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{}", flops.render())?;
    write!(stdout, "{}", power.render())?;
    if let Some(path) = &cli.out {
        csv.save_csv(path)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(cli: &Cli, args: &VerifyArgs) -> Result<Table> {
    let p_total = args.nu as f64;
    let q = build_quantizer(Resolution::Bits(args.bits), args.nb, p_total)?;
    let seed = cli.seed.unwrap_or(0);
    let g = gaussian_matrix(args.nb, args.nu, &mut rng_stream(seed, 0, Purpose::Search));
    let p = g.scale(p_total.sqrt() / g.frobenius_norm());
    let s = verify_bussgang(&q, &p, args.samples, seed)?;
    let mut table = Table::new([
        "bits",
        "delta",
        "samples",
        "cross_corr_norm",
        "cross_corr_relative",
        "rff_error",
        "output_power_ratio",
    ]);
    table.push(vec![
        args.bits.to_string(),
        format!("{:.4}", q.delta),
        s.samples.to_string(),
        format_sig(s.cross_corr_norm),
        format_sig(s.cross_corr_relative),
        format_sig(s.rff_error),
        format_sig(s.output_power_ratio),
    ]);
    Ok(table)
}
