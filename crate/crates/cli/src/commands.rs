use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use qfeedback::validation::{self, CheckOutcome};
use qfeedback::{sample_ensemble, steady_state, von_neumann_entropy, CMatrix, DensityMatrix};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, Resolved, Scenario};
use crate::error::CliError;
use crate::eval::{self, evaluate, metric_names};
use crate::output::{num, write_with_sidecar, Csv};

pub fn steady(r: &Resolved, out: &Path) -> Result<(), CliError> {
    let names = metric_names(r);
    let e = evaluate(r)?;
    println!("scenario {} (d = {}, tau1 = {}, tau2 = {})", r.scenario.name(), r.d, r.tau1, r.tau2);
    if let Some(ss) = &e.steady {
        let spectrum: Vec<String> = ss.state.eigenvalues().iter().map(|x| format!("{x:.10}")).collect();
        println!("steady spectrum     ({})", spectrum.join(", "));
        println!("entropy (normalised) {:.10}", von_neumann_entropy(&ss.state, true));
        println!("linear entropy       {:.10}", qfeedback::linear_entropy(&ss.state));
        println!("purity               {:.10}", ss.state.purity());
        println!("spectral gap         {:.10}", ss.gap);
        let leading: Vec<String> =
            eval::sorted_spectrum(&ss.spectrum).iter().take(4).map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
        println!("cycle spectrum       {} ...", leading.join(" "));
    }
    let mut csv = Csv::new(["metric", "value"]);
    for (name, value) in names.iter().zip(&e.values) {
        if e.steady.is_none() {
            println!("{name:<20} {value:.10}");
        }
        csv.row([name.clone(), num(*value)]);
    }
    match names.iter().position(|n| n == "oracle_deviation").map(|i| e.values[i]) {
        Some(dev) if dev.is_finite() => println!("oracle deviation     {dev:.3e}"),
        _ => println!("oracle deviation     n/a (no closed form for this configuration)"),
    }
    write_with_sidecar(out, &csv.into_bytes(), "steady", r, None)?;
    println!("wrote {}", out.display());
    Ok(())
}

/// Trajectory ensemble as CSV bytes, followed by the ensemble-mean rows.
pub fn trajectory_csv(r: &Resolved) -> Result<Vec<u8>, CliError> {
    let p = eval::protocol(r)?;
    if !p.stage().is_measurement() {
        return Err(CliError::Config(format!("scenario {} has no measurement to condition on", r.scenario.name())));
    }
    let rho0 = DensityMatrix::maximally_mixed(r.d);
    let ensemble = sample_ensemble(&rho0, &p, r.steps, r.ntraj, r.seed)?;
    let mut csv = Csv::new(["trajectory_id", "step", "outcome", "probability", "entropy_normalised", "rho11"]);
    for (id, traj) in ensemble.iter().enumerate() {
        for rec in traj {
            csv.row([
                id.to_string(),
                rec.step.to_string(),
                rec.outcome.to_string(),
                num(rec.probability),
                num(rec.entropy),
                num(rec.state.population(1)),
            ]);
        }
    }
    let n = ensemble.len().max(1) as f64;
    for step in 0..r.steps {
        let mut sum = CMatrix::zeros(r.d, r.d);
        for traj in &ensemble {
            sum += traj[step].state.matrix();
        }
        let mean = DensityMatrix::from_unnormalised(&sum.scale_real(1.0 / n))?;
        csv.row([
            "mean".to_string(),
            (step + 1).to_string(),
            String::new(),
            String::new(),
            num(von_neumann_entropy(&mean, true)),
            num(mean.population(1)),
        ]);
    }
    Ok(csv.into_bytes())
}

pub fn trajectories(r: &Resolved, out: &Path) -> Result<(), CliError> {
    let start = Instant::now();
    let bytes = trajectory_csv(r)?;
    write_with_sidecar(out, &bytes, "trajectories", r, None)?;
    println!(
        "{} trajectories x {} steps of {} (seed {}) in {:.2} s",
        r.ntraj,
        r.steps,
        r.scenario.name(),
        r.seed,
        start.elapsed().as_secs_f64()
    );
    if let Ok(ss) = steady_state(&eval::protocol(r)?) {
        println!("unconditional steady entropy (normalised) {:.10}", von_neumann_entropy(&ss.state, true));
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// One swept parameter: `count` evenly spaced values from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.stop } else { self.start + step * i as f64 }).collect()
    }
}

impl FromStr for Axis {
    type Err = CliError;

    /// `name=start:stop:count`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CliError::Config(format!("axis `{s}` is not of the form name=start:stop:count"));
        let (name, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, count] = parts[..] else { return Err(bad()) };
        let axis = Axis {
            name: name.trim().to_string(),
            start: start.trim().parse().map_err(|_| bad())?,
            stop: stop.trim().parse().map_err(|_| bad())?,
            count: count.trim().parse().map_err(|_| bad())?,
        };
        if axis.count == 0 || !axis.start.is_finite() || !axis.stop.is_finite() {
            return Err(bad());
        }
        Ok(axis)
    }
}

pub const MAX_AXES: usize = 2;

fn grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        let values = axis.values();
        acc.into_iter().flat_map(|prefix| values.iter().map(move |&v| [prefix.clone(), vec![v]].concat())).collect()
    })
}

pub fn sweep_csv(r: &Resolved, axes: &[Axis]) -> Result<(Vec<u8>, usize), CliError> {
    if axes.is_empty() || axes.len() > MAX_AXES {
        return Err(CliError::Config(format!("sweep takes 1 to {MAX_AXES} axes, got {}", axes.len())));
    }
    let mut probe = r.clone();
    for a in axes {
        probe.set(&a.name, a.start)?;
    }
    let names = metric_names(r);
    let points = grid(axes);
    let rows: Vec<Result<Vec<f64>, String>> = points
        .par_iter()
        .map(|point| {
            let mut cfg = r.clone();
            for (a, &v) in axes.iter().zip(point) {
                cfg.set(&a.name, v).map_err(|e| e.to_string())?;
            }
            evaluate(&cfg).map(|e| e.values).map_err(|e| e.to_string())
        })
        .collect();
    let mut header = vec!["grid_index".to_string()];
    header.extend(axes.iter().map(|a| a.name.clone()));
    header.extend(names.iter().cloned());
    header.push("status".into());
    let mut csv = Csv::new(header);
    let mut failures = 0;
    for (i, (point, row)) in points.iter().zip(rows).enumerate() {
        let mut fields = vec![i.to_string()];
        fields.extend(point.iter().map(|&v| num(v)));
        match row {
            Ok(values) => {
                fields.extend(values.iter().map(|&v| num(v)));
                fields.push("ok".into());
            }
            Err(msg) => {
                failures += 1;
                fields.extend(names.iter().map(|_| num(f64::NAN)));
                fields.push(msg.replace([',', '\n'], ";"));
            }
        }
        csv.row(fields);
    }
    Ok((csv.into_bytes(), failures))
}

pub fn sweep(r: &Resolved, axes: &[Axis], out: &Path) -> Result<(), CliError> {
    let start = Instant::now();
    let (bytes, failures) = sweep_csv(r, axes)?;
    write_with_sidecar(out, &bytes, "sweep", r, Some(axes))?;
    let points: usize = axes.iter().map(|a| a.count).product();
    println!(
        "{points} points of {} over {} in {:.2} s ({failures} failed)",
        r.scenario.name(),
        axes.iter().map(|a| a.name.as_str()).collect::<Vec<_>>().join(" x "),
        start.elapsed().as_secs_f64()
    );
    println!("wrote {}", out.display());
    Ok(())
}

/// Same seed, different worker counts: the trajectory CSV must not change.
pub fn determinism_check() -> CheckOutcome {
    let start = Instant::now();
    let run = || -> Result<(Vec<u8>, Vec<u8>), CliError> {
        let cfg = Config {
            scenario: Some(Scenario::MfNoisyCooling),
            d: Some(3),
            ntraj: Some(200),
            steps: Some(40),
            seed: Some(7),
            ..Config::default()
        }
        .resolve()?;
        let a = trajectory_csv(&cfg)?;
        let single =
            rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| CliError::Config(e.to_string()))?;
        let b = single.install(|| trajectory_csv(&cfg))?;
        Ok((a, b))
    };
    let (passed, detail) = match run() {
        Ok((a, b)) => (a == b, format!("{} bytes, identical: {}", a.len(), a == b)),
        Err(e) => (false, format!("error: {e}")),
    };
    CheckOutcome {
        id: validation::CHECK_COUNT + 1,
        name: "deterministic trajectory output",
        passed,
        detail: format!("{detail} [{:.1} s]", start.elapsed().as_secs_f64()),
    }
}

/// Runs every self-check and prints a table. Returns whether all passed.
pub fn validate() -> bool {
    let start = Instant::now();
    let mut outcomes = Vec::new();
    for id in 1..=validation::CHECK_COUNT {
        if let Some(o) = validation::run_check(id) {
            print_outcome(&o);
            outcomes.push(o);
        }
    }
    let det = determinism_check();
    print_outcome(&det);
    outcomes.push(det);
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.to_string()).collect();
    println!(
        "{} of {} checks passed in {:.1} s",
        outcomes.len() - failed.len(),
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
    }
    failed.is_empty()
}

fn print_outcome(o: &CheckOutcome) {
    let verdict = if o.passed { "PASS" } else { "FAIL" };
    println!("{:>2}  {verdict}  {:<55} {}", o.id, o.name, o.detail);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a: Axis = "tau=0:1:11".parse().unwrap();
        assert_eq!((a.name.as_str(), a.count), ("tau", 11));
        let v = a.values();
        assert_eq!((v[0], v[10]), (0.0, 1.0));
        assert!((v[3] - 0.3).abs() < 1e-15);
        assert_eq!("gamma=0.2:0.9:1".parse::<Axis>().unwrap().values(), vec![0.2]);
        for bad in ["tau", "tau=0:1", "tau=0:1:0", "tau=a:1:3", "tau=0:1:3:4"] {
            assert!(bad.parse::<Axis>().is_err(), "{bad}");
        }
    }

    #[test]
    fn grid_is_row_major() {
        let axes = ["a=0:1:2".parse().unwrap(), "b=0:2:3".parse().unwrap()];
        let g = grid(&axes);
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], vec![0.0, 1.0]);
        assert_eq!(g[3], vec![1.0, 0.0]);
    }

    fn resolved(json: &str) -> Resolved {
        serde_json::from_str::<Config>(json).unwrap().resolve().unwrap()
    }

    #[test]
    fn sweep_rejects_too_many_axes() {
        let r = resolved(r#"{"scenario": "compare-cooling"}"#);
        let axes: Vec<Axis> = ["tau=0:1:2", "lambda=0:1:2", "gamma=0:1:2"].iter().map(|s| s.parse().unwrap()).collect();
        assert!(matches!(sweep_csv(&r, &axes), Err(CliError::Config(_))));
        assert!(matches!(sweep_csv(&r, &[]), Err(CliError::Config(_))));
        let unknown = ["zeta=0:1:2".parse().unwrap()];
        assert!(matches!(sweep_csv(&r, &unknown), Err(CliError::Config(_))));
    }

    #[test]
    fn trajectories_need_a_measurement() {
        let r = resolved(r#"{"scenario": "cf-clean", "ntraj": 2, "steps": 2}"#);
        assert!(matches!(trajectory_csv(&r), Err(CliError::Config(_))));
    }

    #[test]
    fn trajectory_rows_and_aggregates() {
        let r = resolved(r#"{"scenario": "mf-noisy-cooling", "ntraj": 3, "steps": 4, "seed": 5}"#);
        let text = String::from_utf8(trajectory_csv(&r).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trajectory_id,step,outcome,probability,entropy_normalised,rho11");
        assert_eq!(lines.len(), 1 + 3 * 4 + 4);
        assert!(lines[13].starts_with("mean,1,,,"));
        assert!(!text.contains('\r'));
    }
}
