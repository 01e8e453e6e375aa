//! The five experiment drivers.

use crate::error::{self, CliError};
use crate::pipeline::{self, BuiltLayer};
use crate::plot::{line_plot, Series};
use crate::report::{
    fmt, CounterexampleOutcome, Csv, HarnessOutcome, OutputDir, ResultRecord,
};
use crate::scenario::{Experiment, Scenario};
use layerlab_core::cross_section::CrossSectionModes;
use layerlab_core::spectral::COUNT_CAP;
use layerlab_core::weyl::{
    certify_scan_with_spectrum, matrix_weyl_bound, ScanReport, SpectrumInfo, WeylThresholds,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Absolute lambda-grid override from the `scan` subcommand.
#[derive(Debug, Clone, Copy)]
pub struct ScanOverride {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub steps: usize,
}

pub fn run(
    scn: &Scenario,
    out_dir: &Path,
    scan_override: Option<ScanOverride>,
) -> Result<ResultRecord, CliError> {
    let mut out = OutputDir::create(out_dir)?;
    let mut record = ResultRecord::new(&scn.name, scn.experiment.as_str(), &scn.raw);
    match scn.experiment {
        Experiment::Threshold => run_threshold(scn, &mut out, &mut record)?,
        Experiment::Scan => run_scan(scn, &mut out, &mut record, scan_override)?,
        Experiment::CounterexampleBend | Experiment::CounterexampleTwist => {
            run_counterexample(scn, &mut out, &mut record)?
        }
        Experiment::MatrixHarness => run_harness(scn, &mut out, &mut record)?,
    }
    out.finish(record)
}

fn write_modes_csv(out: &mut OutputDir, modes: &CrossSectionModes) -> Result<(), CliError> {
    let mut csv = Csv::new("k,energy");
    for (k, e) in modes.energies.iter().enumerate() {
        csv.row(&[format!("{}", k + 1), fmt(*e)]);
    }
    out.write("cross_section.csv", &csv.into_string())
}

fn export_metric(
    scn: &Scenario,
    built: &BuiltLayer,
    out: &mut OutputDir,
) -> Result<(), CliError> {
    if !scn.export_metric {
        return Ok(());
    }
    let path = out.path().join("metric.bin");
    layerlab_core::geometry::write_metric_binary(
        &built.field,
        &path,
        &scn.name,
        scn.raw.get("base").unwrap_or(&serde_json::Value::Null),
    )
    .map_err(|e| error::from_geometry(&scn.name, e))?;
    out.register("metric.bin")?;
    out.register("metric.bin.json")?;
    Ok(())
}

fn run_threshold(
    scn: &Scenario,
    out: &mut OutputDir,
    record: &mut ResultRecord,
) -> Result<(), CliError> {
    let modes = pipeline::modes_for(scn)?;
    record.cross_section_energies = modes.energies.clone();
    write_modes_csv(out, &modes)?;

    let (built, eig) = pipeline::solve_lowest(
        scn,
        &modes,
        scn.length(),
        &scn.base_cells,
        scn.eigen.count,
        scn.eigen.tol,
        scn.eigen.max_iter,
    )?;
    record.eigenvalues = eig.values.clone();
    record.eigenvalue_residuals = eig.residual_norms.clone();

    let mut csv = Csv::new("index,eigenvalue,residual");
    for i in 0..eig.values.len() {
        csv.row(&[format!("{i}"), fmt(eig.values[i]), fmt(eig.residual_norms[i])]);
    }
    out.write("eigenvalues.csv", &csv.into_string())?;

    if !scn.count_thresholds.is_empty() {
        let mut csv = Csv::new("threshold,count");
        for &t in &scn.count_thresholds {
            let (_, below) = pipeline::spectrum_below(
                scn,
                &modes,
                scn.length(),
                &scn.base_cells,
                t,
                COUNT_CAP + 1,
                scn.eigen.tol,
                scn.eigen.max_iter,
            )?;
            if !below.complete {
                return Err(CliError::solver(
                    &scn.name,
                    format!("more than {COUNT_CAP} eigenvalues below {t}"),
                ));
            }
            let count = below.result.values.iter().filter(|&&v| v < t).count();
            record.counts.push((t, count));
            csv.row(&[fmt(t), format!("{count}")]);
        }
        out.write("counts.csv", &csv.into_string())?;
    }

    // eigenvalue counting staircase
    let staircase: Vec<(f64, f64)> = eig
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, (i + 1) as f64))
        .collect();
    out.write(
        "counting.svg",
        &line_plot(
            &format!("{}: eigenvalue counting", scn.name),
            "lambda",
            "N(lambda)",
            &[Series { label: "computed".into(), points: staircase }],
            false,
        ),
    )?;

    export_metric(scn, &built, out)?;
    Ok(())
}

fn lambda_grid(
    e1: f64,
    scn: &Scenario,
    over: Option<ScanOverride>,
) -> Result<Vec<f64>, CliError> {
    if let Some(o) = over {
        if o.steps < 1 || o.lambda_max < o.lambda_min {
            return Err(CliError::Schema {
                pointer: "/scan".into(),
                message: "invalid lambda override range".into(),
            });
        }
        let n = o.steps;
        return Ok((0..n)
            .map(|i| {
                if n == 1 {
                    o.lambda_min
                } else {
                    o.lambda_min
                        + (o.lambda_max - o.lambda_min) * i as f64 / (n - 1) as f64
                }
            })
            .collect());
    }
    let spec = scn.scan.as_ref().expect("scan spec checked at parse time");
    let n = ((spec.lambda_rel_max - spec.lambda_rel_min) / spec.lambda_step).round() as usize + 1;
    Ok((0..n)
        .map(|i| e1 + spec.lambda_rel_min + i as f64 * spec.lambda_step)
        .collect())
}

fn scan_with_spectrum(
    scn: &Scenario,
    modes: &CrossSectionModes,
    length: f64,
    base_cells: &[usize],
    lambdas: &[f64],
    thresholds: &WeylThresholds,
) -> Result<(BuiltLayer, ScanReport), CliError> {
    let cap_value = modes.e1() + thresholds.eig_margin;
    let (built, below) = pipeline::spectrum_below(
        scn,
        modes,
        length,
        base_cells,
        cap_value,
        thresholds.eig_cap,
        thresholds.eig_tol,
        20_000,
    )?;
    let spectrum = SpectrumInfo {
        values: below.result.values.clone(),
        cap_value,
        complete: below.complete,
    };
    let t0 = std::time::Instant::now();
    let mut report =
        certify_scan_with_spectrum(&built.forms, modes, lambdas, thresholds, spectrum)
            .map_err(|e| error::from_weyl(&scn.name, e))?;
    log::info!(
        target: "layerlab_pipeline",
        "certify_scan {} lambdas {:.1}s", lambdas.len(), t0.elapsed().as_secs_f64()
    );
    report.scenario = scn.name.clone();
    Ok((built, report))
}

fn write_scan_outputs(
    out: &mut OutputDir,
    scn: &Scenario,
    report: &ScanReport,
) -> Result<(), CliError> {
    let mut q = Csv::new("lambda,member,radius,quotient");
    let mut v = Csv::new("lambda,decision,slope,ceiling,floor,eps_hat,count_below,cross_gram_max");
    for lv in &report.lambdas {
        for (n, (&r, &qq)) in lv.radii.iter().zip(&lv.quotients).enumerate() {
            q.row(&[fmt(lv.lambda), format!("{}", n + 1), fmt(r), fmt(qq)]);
        }
        v.row(&[
            fmt(lv.lambda),
            format!("{:?}", lv.decision).to_lowercase(),
            fmt(lv.slope),
            fmt(lv.ceiling),
            lv.floor.map(fmt).unwrap_or_default(),
            lv.eps_hat.map(fmt).unwrap_or_default(),
            lv.count_below.map(|c| c.to_string()).unwrap_or_default(),
            fmt(lv.cross_gram_max),
        ]);
    }
    out.write("quotients.csv", &q.into_string())?;
    out.write("verdicts.csv", &v.into_string())?;

    let series: Vec<Series> = report
        .lambdas
        .iter()
        .map(|lv| Series {
            label: format!("l={:.3}", lv.lambda),
            points: lv.radii.iter().cloned().zip(lv.quotients.iter().cloned()).collect(),
        })
        .collect();
    out.write(
        "quotients.svg",
        &line_plot(
            &format!("{}: Weyl quotients", scn.name),
            "R",
            "q",
            &series,
            true,
        ),
    )?;
    Ok(())
}

fn run_scan(
    scn: &Scenario,
    out: &mut OutputDir,
    record: &mut ResultRecord,
    over: Option<ScanOverride>,
) -> Result<(), CliError> {
    let spec = scn.scan.clone().expect("scan spec checked at parse time");
    let modes = pipeline::modes_for(scn)?;
    record.cross_section_energies = modes.energies.clone();
    write_modes_csv(out, &modes)?;

    let lambdas = lambda_grid(modes.e1(), scn, over)?;
    let (built, report) = scan_with_spectrum(
        scn,
        &modes,
        scn.length(),
        &scn.base_cells,
        &lambdas,
        &spec.thresholds,
    )?;
    write_scan_outputs(out, scn, &report)?;
    record.scan = Some(report);

    if let Some(bs) = &spec.bound_state {
        let mut rows = Vec::new();
        let mut csv = Csv::new("length,index,eigenvalue");
        for &f in &bs.length_factors {
            let length = scn.length() * f;
            let cells = vec![(scn.base_cells[0] as f64 * f).round() as usize];
            let (_, eig) = pipeline::solve_lowest(
                scn,
                &modes,
                length,
                &cells,
                bs.count,
                scn.eigen.tol,
                scn.eigen.max_iter,
            )?;
            let below: Vec<f64> = eig
                .values
                .iter()
                .copied()
                .filter(|&v| v < modes.e1())
                .collect();
            for (i, b) in below.iter().enumerate() {
                csv.row(&[fmt(length), format!("{i}"), fmt(*b)]);
            }
            rows.push((length, below));
        }
        out.write("bound_states.csv", &csv.into_string())?;
        record.bound_states = Some(rows);
    }

    export_metric(scn, &built, out)?;
    Ok(())
}

fn run_counterexample(
    scn: &Scenario,
    out: &mut OutputDir,
    record: &mut ResultRecord,
) -> Result<(), CliError> {
    let modes = pipeline::modes_for(scn)?;
    record.cross_section_energies = modes.energies.clone();
    write_modes_csv(out, &modes)?;
    let e1 = modes.e1();

    let lengths = scn.lengths.clone().expect("lengths checked at parse time");
    let nominal = scn.length();
    let mut lambda1 = Vec::new();
    let mut csv = Csv::new("length,lambda1");
    for &l in &lengths {
        let cells = vec![(scn.base_cells[0] as f64 * l / nominal).round().max(8.0) as usize];
        let (_, eig) =
            pipeline::solve_lowest(scn, &modes, l, &cells, 1, scn.eigen.tol, scn.eigen.max_iter)?;
        lambda1.push(eig.values[0]);
        csv.row(&[fmt(l), fmt(eig.values[0])]);
    }
    out.write("lengths.csv", &csv.into_string())?;

    // 1/L^2 extrapolation from the two largest boxes, validated on the
    // smallest
    let n = lengths.len();
    let (l2, l3) = (lengths[n - 2], lengths[n - 1]);
    let (v2, v3) = (lambda1[n - 2], lambda1[n - 1]);
    let (a, b) = (1.0 / (l2 * l2), 1.0 / (l3 * l3));
    let lambda_inf = (v3 * a - v2 * b) / (a - b);
    let c = (v2 - lambda_inf) / a;
    let fit_residual = (lambda_inf + c / (lengths[0] * lengths[0]) - lambda1[0]).abs();
    let delta = match scn.experiment {
        Experiment::CounterexampleBend => e1 - lambda_inf,
        _ => lambda_inf - e1,
    };
    record.counterexample = Some(CounterexampleOutcome {
        lengths: lengths.clone(),
        lambda1: lambda1.clone(),
        lambda_extrapolated: lambda_inf,
        fit_residual,
        e1,
        delta,
    });

    out.write(
        "lambda1_vs_length.svg",
        &line_plot(
            &format!("{}: lambda_1 against 1/L^2", scn.name),
            "1/L^2",
            "lambda_1",
            &[Series {
                label: "lambda_1".into(),
                points: lengths
                    .iter()
                    .zip(&lambda1)
                    .map(|(&l, &v)| (1.0 / (l * l), v))
                    .collect(),
            }],
            false,
        ),
    )?;

    // optional rejection probe for the twisted counterexample
    if let Some(rels) = &scn.scan_reject_rel {
        if !rels.is_empty() {
            let lambdas: Vec<f64> = rels.iter().map(|r| e1 + r).collect();
            let thresholds = WeylThresholds {
                eig_margin: (lambda1[n - 1] - e1) + 0.05,
                eig_cap: 16,
                ..WeylThresholds::default()
            };
            let (_, report) = scan_with_spectrum(
                scn,
                &modes,
                nominal,
                &scn.base_cells,
                &lambdas,
                &thresholds,
            )?;
            write_scan_outputs(out, scn, &report)?;
            record.scan = Some(report);
        }
    }
    Ok(())
}

fn run_harness(
    scn: &Scenario,
    out: &mut OutputDir,
    record: &mut ResultRecord,
) -> Result<(), CliError> {
    let spec = scn.harness.clone().expect("harness spec checked at parse time");
    let mut csv = Csv::new("seed,size,lambda,eps,bound,min_ratio,holds");
    let mut all_hold = true;
    for seed in 0..spec.seeds as u64 {
        let n = 40 + ((seed as usize) * 31) % (spec.max_size.saturating_sub(39)).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
        let h = &b * b.transpose();
        let (evals, _) = layerlab_core::spectral::dense::sym_eigen_sorted(h.clone());
        let mut gap = (0usize, 0.0f64);
        for i in 0..n - 1 {
            let g = evals[i + 1] - evals[i];
            if g > gap.1 {
                gap = (i, g);
            }
        }
        let lambda = 0.5 * (evals[gap.0] + evals[gap.0 + 1]);
        let cert = matrix_weyl_bound(&h, lambda, spec.samples, seed)
            .map_err(|e| error::from_weyl(&scn.name, e))?;
        all_hold &= cert.holds;
        record.harness.push(HarnessOutcome {
            seed,
            size: n,
            lambda,
            eps: cert.eps,
            bound: cert.bound,
            min_ratio: cert.min_ratio,
            holds: cert.holds,
        });
        csv.row(&[
            format!("{seed}"),
            format!("{n}"),
            fmt(lambda),
            fmt(cert.eps),
            fmt(cert.bound),
            fmt(cert.min_ratio),
            format!("{}", cert.holds),
        ]);
    }
    out.write("harness.csv", &csv.into_string())?;
    if !all_hold {
        return Err(CliError::invariant(
            &scn.name,
            "spectral-gap lower bound violated on a sampled matrix",
        ));
    }
    Ok(())
}
