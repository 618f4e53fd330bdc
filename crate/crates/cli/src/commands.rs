//! Subcommand implementations.

use std::path::Path;

use serde_json::{json, Value};
use sirkit::criteria::{eval_g_tau, Basis, Loadings};
use sirkit::linalg::{numerical_rank, spd_condition, sym_eigen_desc};
use sirkit::moments::{compute_sliced_moments, slice_by_response, write_dataset_to, SlicedMoments};
use sirkit::ridge_als::{check_existence, run_als, AlsConfig};
use sirkit::rsir::{fit_rsir, fit_sir, select_tau_cv};
use sirkit::sim::{random_orthonormal_basis, simulate as simulate_data, SimSpec};

use crate::errors::{CliError, CliResult};
use crate::input::{from_csv_or_builtin, load_csv, LoadedData};
use crate::manifest::{write_atomic, ManifestBuilder};
use crate::{
    CounterexampleArgs, CvArgs, DegeneracyArgs, FitArgs, MethodArg, SimulateArgs, SummarizeArgs,
};

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("serialize output: {e}")))?;
    write_atomic(path, text.as_bytes())
}

fn moments_of(dataset: &sirkit::Dataset, slices: usize) -> CliResult<SlicedMoments> {
    let assignment = slice_by_response(dataset, slices)?;
    Ok(compute_sliced_moments(dataset, &assignment)?)
}

fn write_basis_csv(matrix: &nalgebra::DMatrix<f64>, path: &Path) -> CliResult<()> {
    let mut text = String::new();
    let header: Vec<String> = (1..=matrix.ncols()).map(|k| format!("v{k}")).collect();
    text.push_str(&header.join(","));
    text.push('\n');
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| format!("{:?}", matrix[(i, j)]))
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

pub fn fit(args: FitArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("fit");
    manifest.digest_input(&args.input)?;
    let dataset = load_csv(&args.input, Some(&args.response))?;
    let moments = moments_of(&dataset, args.slices)?;

    let result = match args.method {
        MethodArg::Sir => fit_sir(&moments, args.dim)?,
        MethodArg::Rsir => {
            let tau = args.tau.expect("clap enforces --tau for rsir");
            fit_rsir(&moments, args.dim, tau)?
        }
    };

    let value = serde_json::to_value(&result)
        .map_err(|e| CliError::Input(format!("serialize fit result: {e}")))?;
    write_json(&args.output, &value)?;
    if let Some(basis_out) = &args.basis_out {
        write_basis_csv(result.basis.matrix(), basis_out)?;
    }
    println!(
        "fit: method = {}, d = {}, leading eigenvalue = {:.6e}",
        match args.method {
            MethodArg::Sir => "sir",
            MethodArg::Rsir => "rsir",
        },
        args.dim,
        result.eigenvalues[0]
    );

    manifest
        .parameter("input", args.input.display().to_string())
        .parameter("response", args.response.clone())
        .parameter("slices", args.slices)
        .parameter("dim", args.dim)
        .parameter(
            "method",
            match args.method {
                MethodArg::Sir => "sir",
                MethodArg::Rsir => "rsir",
            },
        )
        .parameter("tau", args.tau.map(Value::from).unwrap_or(Value::Null))
        .parameter("output", args.output.display().to_string());
    manifest.emit(args.manifest.as_deref(), Some(&args.output))
}

pub fn degeneracy(args: DegeneracyArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("degeneracy");

    let loaded = if args.simulate {
        let basis_seed = args.sim_seed.wrapping_add(0xBA51);
        let basis = random_orthonormal_basis(args.sim_p, args.sim_dim, basis_seed)?;
        let spec = SimSpec::new(
            args.sim_n,
            basis,
            args.sim_link.into(),
            args.sim_noise_sd,
            args.sim_rho,
            args.sim_seed,
        )?;
        LoadedData {
            dataset: simulate_data(&spec)?,
            digest_path: None,
            default_slices: 5,
        }
    } else {
        from_csv_or_builtin(
            args.input.as_ref(),
            args.response.as_deref(),
            args.builtin_2d,
        )?
    };
    if let Some(path) = &loaded.digest_path {
        manifest.digest_input(path)?;
    }

    let slices = args.slices.unwrap_or(loaded.default_slices);
    let moments = moments_of(&loaded.dataset, slices)?;
    let report = check_existence(&moments);

    let mut config = AlsConfig::new(args.tau, args.dim);
    config.max_iters = args.iters;
    config.a_norm_tolerance = args.a_tol;
    config.rng_seed = args.seed;
    config.init_scale = args.init_scale;
    if args.builtin_2d && args.dim == 1 && moments.p() == 2 {
        // start the fixture on its hand-computed trajectory
        config.initial_basis = Some(Basis::new(nalgebra::DMatrix::from_column_slice(
            2,
            1,
            &[0.0, 1.0],
        ))?);
    }
    let trace = run_als(&moments, &config)?;
    for warning in &trace.warnings {
        eprintln!("warning: {warning}");
    }

    if let Some(path) = &args.trace {
        let mut bytes = Vec::new();
        trace.write_jsonl(&mut bytes)?;
        write_atomic(path, &bytes)?;
    }
    if let Some(path) = &args.trace_csv {
        let mut bytes = Vec::new();
        trace.write_csv(&mut bytes)?;
        write_atomic(path, &bytes)?;
    }

    let initial_a_norm = trace.records.first().map(|r| r.a_norm);
    let ratio = initial_a_norm.map(|first| trace.final_a_norm / first);
    let minimum: Option<f64> = report.exists.then(|| {
        (0..moments.h())
            .map(|y| moments.f()[y] * moments.centered_mean(y).norm_squared())
            .sum()
    });

    if report.exists {
        println!(
            "minimizer exists; minimum = {:.6e}, estimator is the zero basis",
            minimum.unwrap_or(0.0)
        );
    } else {
        println!(
            "minimizer absent; iterates collapsing: |A| ratio {} over {} iterations",
            ratio
                .map(|r| format!("{r:.3e}"))
                .unwrap_or_else(|| "n/a".into()),
            trace.records.len()
        );
    }

    if let Some(path) = &args.output {
        let value = json!({
            "existence": serde_json::to_value(&report)
                .map_err(|e| CliError::Input(format!("serialize report: {e}")))?,
            "stop_reason": serde_json::to_value(trace.stop)
                .map_err(|e| CliError::Input(format!("serialize stop reason: {e}")))?,
            "iterations": trace.records.len(),
            "initial_a_norm": initial_a_norm,
            "final_a_norm": trace.final_a_norm,
            "a_norm_ratio": ratio,
            "minimum": minimum,
            "warnings": trace.warnings,
        });
        write_json(path, &value)?;
    }

    manifest
        .parameter("builtin_2d", args.builtin_2d)
        .parameter("simulate", args.simulate)
        .parameter("slices", slices)
        .parameter("tau", args.tau)
        .parameter("dim", args.dim)
        .parameter("iters", args.iters)
        .parameter("seed", args.seed)
        .parameter("init_scale", args.init_scale)
        .parameter("a_tol", args.a_tol);
    manifest.emit(
        args.manifest.as_deref(),
        args.output.as_deref().or(args.trace.as_deref()),
    )
}

pub fn counterexample(args: CounterexampleArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("counterexample");
    let loaded = from_csv_or_builtin(
        args.input.as_ref(),
        args.response.as_deref(),
        args.builtin_2d,
    )?;
    if let Some(path) = &loaded.digest_path {
        manifest.digest_input(path)?;
    }
    let slices = args.slices.unwrap_or(loaded.default_slices);
    let moments = moments_of(&loaded.dataset, slices)?;

    let (basis, loadings, gap) = sirkit::ridge_als::construct_counterexample(
        &moments,
        args.tau,
        args.dim,
        args.epsilon_fraction,
    )?;
    let zero = Basis::new(nalgebra::DMatrix::zeros(moments.p(), args.dim))?;
    let reevaluated = eval_g_tau(&moments, &basis, &loadings, args.tau)?
        - eval_g_tau(&moments, &zero, &loadings, args.tau)?;
    let epsilon = basis.matrix().column(0).norm();
    let witness_slice = witness_column(&loadings);

    let value = json!({
        "p": moments.p(),
        "d": args.dim,
        "h": moments.h(),
        "tau": args.tau,
        "epsilon_fraction": args.epsilon_fraction,
        "epsilon": epsilon,
        "witness_slice": witness_slice,
        "basis": basis.matrix().as_slice(),
        "loadings": loadings.matrix().as_slice(),
        "gap_analytic": gap,
        "gap_reevaluated": reevaluated,
    });
    write_json(&args.output, &value)?;

    manifest
        .parameter("builtin_2d", args.builtin_2d)
        .parameter("slices", slices)
        .parameter("tau", args.tau)
        .parameter("dim", args.dim)
        .parameter("epsilon_fraction", args.epsilon_fraction)
        .parameter("output", args.output.display().to_string());
    manifest.emit(args.manifest.as_deref(), Some(&args.output))?;

    let scale = gap.abs().max(reevaluated.abs());
    if (gap - reevaluated).abs() > 1e-10 * scale {
        return Err(CliError::Numerical(format!(
            "analytic gap {gap} and re-evaluated gap {reevaluated} disagree beyond 1e-10 relative"
        )));
    }
    println!(
        "counterexample: gap = {gap:.6e} < 0, re-evaluated {reevaluated:.6e}, epsilon = {epsilon:.6e}"
    );
    Ok(())
}

fn witness_column(loadings: &Loadings) -> usize {
    let mut best = 0;
    let mut best_norm = -1.0;
    for y in 0..loadings.h() {
        let norm = loadings.column(y).norm();
        if norm > best_norm {
            best_norm = norm;
            best = y;
        }
    }
    best
}

pub fn cv(args: CvArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("cv");
    manifest.digest_input(&args.input)?;
    let dataset = load_csv(&args.input, Some(&args.response))?;

    let selection = select_tau_cv(
        &dataset,
        args.slices,
        args.dim,
        &args.grid,
        args.folds,
        args.seed,
    )?;

    let value = serde_json::to_value(&selection)
        .map_err(|e| CliError::Input(format!("serialize selection: {e}")))?;
    write_json(&args.output, &value)?;
    if let Some(path) = &args.scores {
        let mut text = String::from("tau,score\n");
        for (tau, score) in selection.grid.iter().zip(&selection.scores) {
            text.push_str(&format!("{tau:?},{score:?}\n"));
        }
        write_atomic(path, text.as_bytes())?;
    }
    println!("cv: chosen tau = {}", selection.chosen);

    manifest
        .parameter("input", args.input.display().to_string())
        .parameter("response", args.response.clone())
        .parameter("slices", args.slices)
        .parameter("dim", args.dim)
        .parameter("grid", args.grid.clone())
        .parameter("folds", args.folds)
        .parameter("seed", args.seed)
        .parameter("output", args.output.display().to_string());
    manifest.emit(args.manifest.as_deref(), Some(&args.output))
}

pub fn simulate(args: SimulateArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("simulate");
    let basis_seed = args
        .basis_seed
        .unwrap_or_else(|| args.seed.wrapping_add(0xBA51));
    let basis = random_orthonormal_basis(args.p, args.dim, basis_seed)?;
    let spec = SimSpec::new(
        args.n,
        basis.clone(),
        args.link.into(),
        args.noise_sd,
        args.rho,
        args.seed,
    )?;
    let dataset = simulate_data(&spec)?;

    let mut bytes = Vec::new();
    write_dataset_to(&dataset, &mut bytes)?;
    write_atomic(&args.output, &bytes)?;
    if let Some(path) = &args.basis_out {
        write_basis_csv(basis.matrix(), path)?;
    }
    println!(
        "simulate: wrote {} observations with p = {} to {}",
        args.n,
        args.p,
        args.output.display()
    );

    manifest
        .parameter("n", args.n)
        .parameter("p", args.p)
        .parameter("dim", args.dim)
        .parameter(
            "link",
            format!("{:?}", sirkit::Link::from(args.link)).to_lowercase(),
        )
        .parameter("rho", args.rho)
        .parameter("noise_sd", args.noise_sd)
        .parameter("seed", args.seed)
        .parameter("basis_seed", basis_seed)
        .parameter("output", args.output.display().to_string());
    manifest.emit(args.manifest.as_deref(), Some(&args.output))
}

pub fn summarize(args: SummarizeArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("summarize");
    manifest.digest_input(&args.input)?;
    let dataset = load_csv(&args.input, Some(&args.response))?;
    let moments = moments_of(&dataset, args.slices)?;

    println!(
        "n = {}, p = {}, slices = {}",
        moments.n(),
        moments.p(),
        moments.h()
    );
    for y in 0..moments.h() {
        println!(
            "slice {:>3}: f = {:.4}, |slice mean - overall mean| = {:.6e}",
            y + 1,
            moments.f()[y],
            moments.centered_mean(y).norm()
        );
    }
    let (sigma_eigs, _) = sym_eigen_desc(moments.sigma());
    println!(
        "rank(sigma) = {} of {}, condition = {:.3e}",
        numerical_rank(&sigma_eigs, 1e-10),
        moments.p(),
        spd_condition(&sigma_eigs)
    );
    let (gamma_eigs, _) = sym_eigen_desc(moments.gamma());
    let shown = moments.p().min(moments.h()).min(5);
    let top: Vec<String> = gamma_eigs
        .iter()
        .take(shown)
        .map(|l| format!("{l:.6e}"))
        .collect();
    println!("top eigenvalues of gamma: {}", top.join(", "));

    manifest
        .parameter("input", args.input.display().to_string())
        .parameter("response", args.response.clone())
        .parameter("slices", args.slices);
    manifest.emit(args.manifest.as_deref(), None)
}
