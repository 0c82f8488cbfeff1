use std::fmt::Write as _;
use std::fs;

use anyhow::{bail, Context, Result};
use homecare_alp::alp::{
    closed_form_params, column_generation_with, dual_certificate, special_case_violations, tune_epsilon, AlpParams,
    CgOptions, TuneOptions, Variant,
};
use homecare_alp::bounds::{estimate_gap, BoundConfig};
use homecare_alp::instance::ProblemInstance;
use homecare_alp::policies::{
    classify_regions, tune_sb_threshold, AlpPolicy, DivertAll, MyopicPolicy, Policy, RejectAll, SbConfig, SbPolicy,
};
use homecare_alp::sim::{compare_policies, evaluate, initial_states, SimConfig, SimReport};

use crate::output::{load_instance, Failure, Run};
use crate::{AlpArgs, Command, Common, SbArgs, SimArgs};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate { instance } => validate(&instance),
        Command::SolveAlp { common, alp } => {
            let (inst, mut run) = start("solve-alp", &common, serde_json::json!({ "alp": alp }))?;
            let params = alp_params(&inst, &alp)?;
            run.lap("solve");
            let m = &params.meta;
            let md = format!(
                "| Variant | ε | Master solves | Columns | Objective | Seconds |\n|---|---|---|---|---|---|\n| {} | {} | {} | {} | {:.6} | {:.3} |\n",
                m.variant.name(),
                m.epsilon,
                m.iterations,
                m.columns,
                m.objective,
                m.solve_seconds
            );
            run.write("params.json", &params.to_json(&inst))?;
            run.write_markdown("report.md", &md)?;
            run.finish()
        }
        Command::ClosedForm { common, eps } => {
            let (inst, mut run) = start("closed-form", &common, serde_json::json!({ "eps": eps }))?;
            let violations = special_case_violations(&inst);
            if !violations.is_empty() {
                return Err(Failure { code: 1, kind: "precondition".into(), message: "instance is not a special case".into(), errors: violations }.into());
            }
            let params = closed_form_params(&inst)?;
            let eps = eps.unwrap_or_else(|| mean_rate(&inst));
            let cert = dual_certificate(&inst, &params, eps)?;
            run.lap("solve");
            let md = format!(
                "| ε | Σβ | 1/(1−γ) | Accepts all | Within caps | Certificate valid |\n|---|---|---|---|---|---|\n| {eps} | {:.6} | {:.6} | {} | {} | {} |\n",
                cert.lhs, cert.limit, cert.accepts_all, cert.within_caps, cert.valid
            );
            run.write("params.json", &params.to_json(&inst))?;
            run.write_markdown("report.md", &md)?;
            run.finish()
        }
        Command::TuneEps { common, variant, sim } => {
            let (inst, mut run) = start("tune-eps", &common, serde_json::json!({ "variant": variant, "sim": sim }))?;
            let opts = TuneOptions { sim: sim_config(&sim, common.seed), cg: CgOptions::default(), ..TuneOptions::default() };
            let out = tune_epsilon(&inst, Variant::parse(&variant)?, &opts)?;
            run.lap("tune");
            let mut csv = String::from("epsilon,value,reused,rejection_hours,diversion_hours,travel_time,acceptance_rate,all_reject\n");
            let mut md = format!(
                "Chosen ε = {} after {} LP solves{}{}.\n\n| ε | Value | Reused | Rejection (h/day) | Diversion (h/day) | Travel (h/day) | Acceptance | All reject |\n|---|---|---|---|---|---|---|---|\n",
                out.epsilon,
                out.solves,
                if out.ceiling_hit { "; the ε ceiling was reached" } else { "" },
                if out.budget_exhausted { "; the budget ran out" } else { "" }
            );
            for p in &out.trace {
                writeln!(
                    csv,
                    "{:.6},{:.6},{},{:.6},{:.6},{:.6},{:.6},{}",
                    p.epsilon, p.value, p.reused, p.rejection_hours, p.diversion_hours, p.travel_time, p.acceptance_rate, p.all_reject
                )?;
                writeln!(
                    md,
                    "| {:.6} | {:.3} | {} | {:.3} | {:.3} | {:.3} | {:.3} | {} |",
                    p.epsilon, p.value, p.reused, p.rejection_hours, p.diversion_hours, p.travel_time, p.acceptance_rate, p.all_reject
                )?;
            }
            run.write("params.json", &out.params.to_json(&inst))?;
            run.write("report.csv", &csv)?;
            run.write_markdown("report.md", &md)?;
            run.finish()
        }
        Command::TuneSb { common, sb, candidates, sim } => {
            let (inst, mut run) =
                start("tune-sb", &common, serde_json::json!({ "sb": sb, "candidates": candidates, "sim": sim }))?;
            let cands = parse_list(&candidates)?;
            let base = SbConfig { scenarios: sb.scenarios, threshold: sb.threshold, lookahead: None };
            let t = tune_sb_threshold(&inst, &base, &cands, &sim_config(&sim, common.seed))?;
            run.lap("tune");
            let mut csv = String::from("threshold,value\n");
            let mut md = format!("Chosen threshold: {}\n\n| Threshold | Value |\n|---|---|\n", t.threshold);
            for (n, v) in &t.values {
                writeln!(csv, "{n},{v:.6}")?;
                writeln!(md, "| {n} | {v:.3} |")?;
            }
            run.write("report.csv", &csv)?;
            run.write_markdown("report.md", &md)?;
            run.finish()
        }
        Command::Simulate { common, policies, alp, sb, sim } => {
            let cfg_json = serde_json::json!({ "policies": policies, "alp": alp, "sb": sb, "sim": sim });
            let (inst, mut run) = start("simulate", &common, cfg_json)?;
            let ps = build_policies(&inst, &policies, &alp, &sb)?;
            run.lap("setup");
            let cfg = sim_config(&sim, common.seed);
            cfg.validate()?;
            let states = initial_states(&inst, &cfg)?;
            let refs: Vec<&dyn Policy> = ps.iter().map(|p| p.as_ref()).collect();
            let runs = evaluate(&inst, &refs, &states, &cfg)?;
            let report = SimReport::build(refs.iter().map(|p| p.name().to_string()).collect(), 0, cfg, runs);
            run.lap("simulate");
            write_report(run, &report)
        }
        Command::Compare { common, policies, reference, alp, sb, sim } => {
            let cfg_json = serde_json::json!({ "policies": policies, "ref": reference, "alp": alp, "sb": sb, "sim": sim });
            let (inst, mut run) = start("compare", &common, cfg_json)?;
            let ps = build_policies(&inst, &policies, &alp, &sb)?;
            run.lap("setup");
            let refs: Vec<&dyn Policy> = ps.iter().map(|p| p.as_ref()).collect();
            let Some(r) = refs.iter().position(|p| p.name() == reference) else {
                bail!("reference policy `{reference}` is not among --policies");
            };
            let report = compare_policies(&inst, &refs, r, &sim_config(&sim, common.seed))?;
            run.lap("simulate");
            write_report(run, &report)
        }
        Command::Bound { common, policies, alp, sb, states, warmup, paths, layer_cap } => {
            let cfg_json = serde_json::json!({
                "policy": policies, "alp": alp, "sb": sb, "states": states, "warmup": warmup, "paths": paths, "layer_cap": layer_cap
            });
            let (inst, mut run) = start("bound", &common, cfg_json)?;
            let ps = build_policies(&inst, &policies, &alp, &sb)?;
            let [policy] = ps.as_slice() else { bail!("bound takes exactly one policy") };
            let sim = SimConfig { initial_states: states, warmup_days: warmup, seed: common.seed, ..SimConfig::default() };
            let starts = initial_states(&inst, &sim)?;
            run.lap("setup");
            let report = estimate_gap(&inst, &starts, policy.as_ref(), &BoundConfig { paths, layer_cap, seed: common.seed })?;
            run.lap("bound");
            let mut md = format!(
                "| Policy | Gap% (SD) | Lower bound | Policy cost | Pairs | LB > UB |\n|---|---|---|---|---|---|\n| {} | {:.2} ({:.2}) | {:.3} | {:.3} | {} | {} |\n",
                report.policy,
                report.gap_mean,
                report.gap_sd,
                report.lower_mean,
                report.upper_mean,
                report.samples.len(),
                report.violations
            );
            if policies.trim() == "alp" {
                let params = alp_params(&inst, &alp)?;
                let lb = report.lower_by_state();
                md.push_str("\n| State | Affine value | Mean relaxation bound |\n|---|---|---|\n");
                for (n, s) in starts.iter().enumerate() {
                    writeln!(md, "| {n} | {:.3} | {:.3} |", params.value(s), lb[n])?;
                }
            }
            run.write("report.csv", &report.to_csv())?;
            run.write_markdown("report.md", &md)?;
            run.finish()
        }
        Command::Classify { common, alp } => {
            let (inst, mut run) = start("classify", &common, serde_json::json!({ "alp": alp }))?;
            let params = alp_params(&inst, &alp)?;
            let labels = classify_regions(&params, &inst);
            run.lap("classify");
            let mut csv = String::from("type,region,depot_distance,label\n");
            let mut md = String::from("| Type | Region | Depot distance (h) | Label |\n|---|---|---|---|\n");
            for (k, row) in labels.iter().enumerate() {
                for (l, label) in row.iter().enumerate() {
                    let d = inst.geometry.depot_distance(l);
                    writeln!(csv, "{k},{l},{d:.6},{}", label.as_str())?;
                    writeln!(md, "| {k} | {l} | {d:.3} | {} |", label.as_str())?;
                }
            }
            run.write("report.csv", &csv)?;
            run.write_markdown("report.md", &md)?;
            run.finish()
        }
    }
}

fn validate(path: &std::path::Path) -> Result<()> {
    let (inst, _) = load_instance(path)?;
    let summary = serde_json::json!({
        "valid": true,
        "regions": inst.regions(),
        "types": inst.types(),
        "horizon": inst.horizon(),
        "daily_demand_h": inst.daily_demand(),
        "gamma": inst.gamma,
        "arrival_rates": inst.rate_matrix(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn start(command: &str, common: &Common, mut config: serde_json::Value) -> Result<(ProblemInstance, Run)> {
    config["common"] = serde_json::to_value(common)?;
    if let Some(n) = common.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().context("configuring worker threads")?;
    }
    let (inst, text) = load_instance(&common.instance)?;
    let run = Run::new(command, &common.instance, &text, common.seed, config, &common.out)?;
    Ok((inst, run))
}

fn mean_rate(inst: &ProblemInstance) -> f64 {
    let rates = inst.rate_matrix();
    rates.iter().flatten().sum::<f64>() / (inst.types() * inst.regions()) as f64
}

fn alp_params(inst: &ProblemInstance, alp: &AlpArgs) -> Result<AlpParams> {
    if let Some(path) = &alp.params {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(AlpParams::from_json(&text, inst)?);
    }
    let variant = Variant::parse(&alp.variant)?;
    if variant == Variant::ClosedForm {
        return Ok(closed_form_params(inst)?);
    }
    let eps = alp.eps.unwrap_or_else(|| mean_rate(inst));
    Ok(column_generation_with(inst, eps, variant, &CgOptions::default())?.params)
}

fn sim_config(sim: &SimArgs, seed: u64) -> SimConfig {
    SimConfig {
        initial_states: sim.states,
        warmup_days: sim.warmup,
        eval_days: sim.days,
        seed,
        common_random_numbers: !sim.no_crn,
    }
}

fn parse_list(text: &str) -> Result<Vec<usize>> {
    text.split(',').map(|s| s.trim().parse::<usize>().with_context(|| format!("`{s}` is not a count"))).collect()
}

fn build_policies(inst: &ProblemInstance, names: &str, alp: &AlpArgs, sb: &SbArgs) -> Result<Vec<Box<dyn Policy>>> {
    names
        .split(',')
        .map(|n| -> Result<Box<dyn Policy>> {
            Ok(match n.trim() {
                "alp" => Box::new(AlpPolicy::new(alp_params(inst, alp)?)),
                "myopic" => Box::new(MyopicPolicy),
                "sb" => Box::new(SbPolicy::new(SbConfig { scenarios: sb.scenarios, threshold: sb.threshold, lookahead: None })),
                "reject-all" => Box::new(RejectAll),
                "divert-all" => Box::new(DivertAll),
                other => bail!("unknown policy `{other}` (expected alp, myopic, sb, reject-all or divert-all)"),
            })
        })
        .collect()
}

fn write_report(mut run: Run, report: &SimReport) -> Result<()> {
    run.write("report.csv", &report.to_csv())?;
    run.write_markdown("report.md", &report.to_markdown())?;
    run.finish()
}
