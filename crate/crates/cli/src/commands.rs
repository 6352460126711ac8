use std::f64::consts::FRAC_PI_2;

use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use locc_core::gates::GateSelector;
use locc_core::protocols::{self, Mode, ShotOutcome};
use locc_core::{cost, markov, measures, typicality, Error, Result};

use crate::output::{Cell, Config, Report, Table};

#[derive(Args, Debug)]
pub struct ProtocolArgs {
    #[arg(long, default_value_t = FRAC_PI_2)]
    theta: f64,
    /// Resource parameter (default: sqrt(theta)).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Enumerate every branch instead of sampling.
    #[arg(long)]
    exhaustive: bool,
    /// Run the four-round composite instead of the probabilistic half.
    #[arg(long)]
    composite: bool,
}

#[derive(Args, Debug)]
pub struct CostArgs {
    /// Log-spaced grid `lo:hi:count`.
    #[arg(long, default_value = "0.001:1.5707963267948966:50")]
    grid: String,
    /// Solve for the largest angle with four-round cost below one ebit.
    #[arg(long, conflicts_with = "tradeoff")]
    theta_max: bool,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Two-round lower bound against four-round upper bound at `--theta`.
    #[arg(long)]
    tradeoff: bool,
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
}

#[derive(Args, Debug)]
pub struct MarkovArgs {
    /// `utheta:<angle>`, `utilde:<angle>`, `utilde-dagger:<angle>`, `czz` or `file:<path>`.
    #[arg(long)]
    gate: GateSelector,
}

#[derive(Args, Debug)]
pub struct NshotArgs {
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 0.15)]
    delta: f64,
    /// Comma-separated batch sizes or `start:end:step`.
    #[arg(long, default_value = "20,50,100")]
    n: String,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
}

#[derive(Args, Debug)]
pub struct TypicalityArgs {
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 0.15)]
    delta: f64,
    /// Comma-separated sizes or `start:end:step`.
    #[arg(long, default_value = "4:20:4")]
    n: String,
    /// Report the Bell-pair budget and majorization test instead of the scan.
    #[arg(long)]
    dilution: bool,
}

fn parse_error(msg: String) -> Error {
    Error::Parse(msg)
}

/// `a,b,c` or `start:end:step` (inclusive).
pub fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    let num = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| parse_error(format!("bad size `{s}` in `{text}`")))
    };
    let sizes = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(parse_error(format!("range `{text}` must be start:end:step")));
        }
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step == 0 || a > b {
            return Err(parse_error(format!("empty range `{text}`")));
        }
        (a..=b).step_by(step).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(parse_error(format!("sizes in `{text}` must be positive")));
    }
    Ok(sizes)
}

fn parse_grid(text: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(parse_error(format!("grid `{text}` must be lo:hi:count")));
    }
    let real = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| parse_error(format!("bad number `{s}` in `{text}`")))
    };
    let count = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|_| parse_error(format!("bad count in `{text}`")))?;
    Ok((real(parts[0])?, real(parts[1])?, count))
}

fn positive_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::OutOfRange {
            name: "trials",
            value: 0.0,
            range: "positive integers",
        });
    }
    Ok(())
}

fn outcome_string(o: &ShotOutcome) -> String {
    o.transcript
        .outcomes
        .iter()
        .map(|r| format!("{}={}", r.key, r.outcome))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn protocol(a: &ProtocolArgs, seed: u64, config: &mut Config) -> Result<Report> {
    let alpha = a.alpha.unwrap_or(a.theta.sqrt());
    let name = if a.composite { "composite" } else { "first_half" };
    config.extend([
        ("command", "protocol".to_string()),
        ("protocol", name.to_string()),
        ("theta", a.theta.to_string()),
        ("alpha", alpha.to_string()),
        ("mode", if a.exhaustive { "exhaustive" } else { "sampled" }.to_string()),
        ("input", "|+>_A |+>_B".to_string()),
    ]);
    if !a.exhaustive {
        config.push(("trials", a.trials.to_string()));
    }
    let input = protocols::plus_plus();
    let run = |mode: Mode| -> Result<Vec<(f64, ShotOutcome)>> {
        if a.composite {
            protocols::composite_single_shot(a.theta, alpha, &input, mode)
        } else {
            protocols::prob_first_half(a.theta, alpha, &input, mode)
        }
    };
    // the composite always targets θ; the half targets whatever it applied
    let fidelity = |o: &ShotOutcome| {
        let angle = if a.composite { a.theta } else { o.applied_angle };
        protocols::gate_fidelity(&input, &o.post_state, angle)
    };
    let p = cost::success_prob(alpha, a.theta)?;
    let analytic_cost = if a.composite {
        cost::avg_cost(alpha, a.theta)?
    } else {
        measures::binary_entropy((alpha / 2.0).cos().powi(2))?
    };

    if a.exhaustive {
        let mut t = Table::new(vec![
            "branch",
            "outcomes",
            "probability",
            "success",
            "applied_angle",
            "fidelity",
            "net_cost",
            "rounds",
        ]);
        for (i, (prob, o)) in run(Mode::Exhaustive)?.iter().enumerate() {
            t.push(vec![
                i.into(),
                outcome_string(o).into(),
                (*prob).into(),
                o.success.into(),
                o.applied_angle.into(),
                fidelity(o)?.into(),
                o.ledger.net_cost.into(),
                locc_core::locc::count_rounds(&o.transcript).into(),
            ]);
        }
        return Ok(Report::Table(t));
    }

    positive_trials(a.trials)?;
    let per_trial = (0..a.trials)
        .into_par_iter()
        .map(|trial| -> Result<(u64, f64, f64)> {
            let leaves = run(Mode::Sampled { seed, trial })?;
            let o = &leaves[0].1;
            Ok((u64::from(o.success), fidelity(o)?, o.ledger.net_cost))
        })
        .collect::<Result<Vec<_>>>()?;
    // serial fold keeps the totals independent of the worker count
    let (wins, min_fid, cost_sum) = per_trial
        .iter()
        .fold((0, 1.0f64, 0.0), |x, y| (x.0 + y.0, x.1.min(y.1), x.2 + y.2));
    let m = a.trials as f64;
    let rate = wins as f64 / m;
    let se = (p * (1.0 - p) / m).sqrt();
    let mut t = Table::new(vec![
        "protocol",
        "theta",
        "alpha",
        "trials",
        "successes",
        "empirical_p",
        "analytic_p",
        "std_error",
        "z_score",
        "min_fidelity",
        "mean_net_cost",
        "analytic_net_cost",
    ]);
    t.push(vec![
        name.into(),
        a.theta.into(),
        alpha.into(),
        a.trials.into(),
        wins.into(),
        rate.into(),
        p.into(),
        se.into(),
        (if se > 0.0 { (rate - p) / se } else { 0.0 }).into(),
        min_fid.into(),
        (cost_sum / m).into(),
        analytic_cost.into(),
    ]);
    Ok(Report::Table(t))
}

pub fn cost(a: &CostArgs, config: &mut Config) -> Result<Report> {
    config.push(("command", "cost".to_string()));
    if a.theta_max {
        config.push(("tol", a.tol.to_string()));
        let theta = cost::theta_max_solve(a.tol)?;
        let e = cost::e_theta(theta)?.e_theta;
        let mut t = Table::new(vec!["theta_max", "E_theta_max", "abs_error", "tol"]);
        t.push(vec![theta.into(), e.into(), (e - 1.0).abs().into(), a.tol.into()]);
        return Ok(Report::Table(t));
    }
    if a.tradeoff {
        config.push(("theta", a.theta.to_string()));
        let r = cost::tradeoff_report(a.theta)?;
        let mut t = Table::new(vec![
            "theta",
            "lower_bound_two_round",
            "upper_bound_four_round",
            "separation",
            "theta_max",
        ]);
        t.push(vec![
            r.theta.into(),
            r.lower_bound_two_round.into(),
            r.upper_bound_four_round.into(),
            r.separation.into(),
            r.theta_max.into(),
        ]);
        return Ok(Report::Table(t));
    }
    config.push(("grid", a.grid.clone()));
    let (lo, hi, count) = parse_grid(&a.grid)?;
    let curve = cost::cost_curve(&cost::log_grid(lo, hi, count)?)?;
    let mut t = Table::new(vec!["theta", "alpha_theta", "p_theta", "h_theta", "E_theta"]);
    for c in curve {
        t.push(vec![
            c.theta.into(),
            c.alpha_theta.into(),
            c.p_theta.into(),
            c.h_theta.into(),
            c.e_theta.into(),
        ]);
    }
    Ok(Report::Table(t))
}

pub fn markov(a: &MarkovArgs, config: &mut Config) -> Result<Report> {
    config.extend([("command", "markov".to_string()), ("gate", a.gate.to_string())]);
    let gate = a.gate.build()?;
    let total = gate.dim();
    let d = (1..=total).find(|d| d * d >= total).unwrap_or(1);
    if d * d != total || d < 2 {
        return Err(Error::DimensionMismatch(format!(
            "a {total}x{total} gate is not bipartite with equal local dimensions"
        )));
    }
    let report = markov::markov_cost(&gate, d)?;
    let mut doc = report.to_json();
    doc["gate"] = json!(a.gate.to_string());
    doc["local_dim"] = json!(d);
    Ok(Report::Json(doc))
}

pub fn nshot(a: &NshotArgs, seed: u64, config: &mut Config) -> Result<Report> {
    config.extend([
        ("command", "nshot".to_string()),
        ("theta", a.theta.to_string()),
        ("delta", a.delta.to_string()),
        ("n", a.n.clone()),
        ("trials", a.trials.to_string()),
        ("input", "|+>_A |+>_B per pair".to_string()),
    ]);
    positive_trials(a.trials)?;
    let mut t = Table::new(vec![
        "n",
        "delta",
        "trials",
        "events_b",
        "epsilon_hat",
        "std_error",
        "epsilon_exact",
        "mean_trace_distance",
        "mean_net_cost",
    ]);
    for n in parse_sizes(&a.n)? {
        let e = protocols::estimate_epsilon(a.theta, n, a.delta, a.trials, seed)?;
        t.push(vec![
            e.n.into(),
            e.delta.into(),
            e.trials.into(),
            e.events_b.into(),
            e.epsilon_hat.into(),
            e.std_error.into(),
            e.epsilon_exact.into(),
            e.mean_trace_distance.into(),
            e.mean_net_cost.into(),
        ]);
    }
    Ok(Report::Table(t))
}

pub fn typicality(a: &TypicalityArgs, config: &mut Config) -> Result<Report> {
    config.extend([
        ("command", "typicality".to_string()),
        ("theta", a.theta.to_string()),
        ("delta", a.delta.to_string()),
        ("n", a.n.clone()),
        ("dilution", a.dilution.to_string()),
    ]);
    let sizes = parse_sizes(&a.n)?;
    if a.dilution {
        let mut t = Table::new(vec![
            "n",
            "delta",
            "budget_bits",
            "bits",
            "feasible",
            "min_lambda_prime",
        ]);
        for n in sizes {
            let set = typicality::typical_set(typicality::source(a.theta)?, n, a.delta)?;
            if set.is_empty() {
                let budget = n as f64 * (set.entropy + a.delta);
                t.push(vec![
                    n.into(),
                    a.delta.into(),
                    budget.into(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                ]);
                continue;
            }
            let d = typicality::dilution_feasible(a.theta, n, a.delta)?;
            t.push(vec![
                n.into(),
                a.delta.into(),
                d.budget_bits.into(),
                d.bits.into(),
                d.feasible.into(),
                d.min_lambda_prime.into(),
            ]);
        }
        return Ok(Report::Table(t));
    }
    let scan = typicality::concentration_scan(a.theta, a.delta, &sizes)?;
    let mut t = Table::new(vec![
        "n",
        "delta",
        "P",
        "one_minus_P",
        "eps_prime",
        "budget_bits",
        "feasible",
    ]);
    for r in scan.rows {
        t.push(vec![
            r.n.into(),
            r.delta.into(),
            r.p.into(),
            r.one_minus_p.into(),
            r.eps_prime.into(),
            r.budget_bits.into(),
            r.feasible.into(),
        ]);
    }
    Ok(Report::Table(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_accept_lists_and_ranges() {
        assert_eq!(parse_sizes("4:20:4").unwrap(), vec![4, 8, 12, 16, 20]);
        assert_eq!(parse_sizes("20, 50,100").unwrap(), vec![20, 50, 100]);
        assert!(parse_sizes("4:2:1").is_err());
        assert!(parse_sizes("0,3").is_err());
        assert!(parse_sizes("a").is_err());
    }

    #[test]
    fn grid_needs_three_fields() {
        assert_eq!(parse_grid("0.1:1:5").unwrap(), (0.1, 1.0, 5));
        assert!(parse_grid("0.1:1").is_err());
        assert!(parse_grid("0.1:inf:3").is_err());
    }
}
