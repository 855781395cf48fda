//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;

use graspcast_core::dataset::{EstimatorId, GripperId, SplitAssignment};
use graspcast_core::features::Variant;
use graspcast_core::report::{
    cell_accuracies, grasp_success_table, improvement_summary, pose_error_table, render_tables,
    write_eval_csv, write_improvement_csv, write_pose_error_csv, write_success_csv, EvalResult,
    Method,
};
use graspcast_core::synth::{default_grasp_table, generate_trials, write_corpus, GenerateConfig};
use rayon::prelude::*;

use crate::config::Config;
use crate::error::{io_data, CmdError, CmdResult};
use crate::pipeline::{
    corpus_summary, ensure_split, evaluate_cell, execute_run, learn_baseline, load_corpus,
    resolve_scope, runs_for, write_join_cache, JoinedCorpora, LoadedCorpus, RunSpec,
};

fn print_warnings(warnings: &[String]) {
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
}

/// Grippers a variant trains across, given the requested scope.
fn run_grippers(variant: Variant, scope: &[GripperId], corpus: &LoadedCorpus) -> Vec<GripperId> {
    if variant.spans_grippers() {
        corpus.gripper_ids()
    } else {
        scope.to_vec()
    }
}

/// Builds joined corpora and splits for every (principal, gripper) needed.
fn prepare_joined(
    cfg: &Config,
    corpus: &LoadedCorpus,
    principals: &[EstimatorId],
    grippers: &[GripperId],
) -> CmdResult<(JoinedCorpora, BTreeMap<(EstimatorId, GripperId), SplitAssignment>)> {
    let joined = JoinedCorpora::build(corpus, principals, grippers)?;
    let mut splits = BTreeMap::new();
    for principal in principals {
        for gripper in grippers {
            let samples = joined.get(principal, gripper);
            let (assignment, warnings) = ensure_split(cfg, samples, principal, gripper)?;
            print_warnings(&warnings);
            splits.insert((principal.clone(), gripper.clone()), assignment);
        }
    }
    Ok((joined, splits))
}

fn splits_for_principal(
    splits: &BTreeMap<(EstimatorId, GripperId), SplitAssignment>,
    principal: &EstimatorId,
) -> BTreeMap<GripperId, SplitAssignment> {
    splits
        .iter()
        .filter(|((pe, _), _)| pe == principal)
        .map(|((_, gripper), assignment)| (gripper.clone(), assignment.clone()))
        .collect()
}

pub fn cmd_synth(cfg: &Config) -> CmdResult<()> {
    let grasp_table = match &cfg.grasps {
        Some(path) => graspcast_core::synth::GraspTable::load(path)?,
        None => default_grasp_table(),
    };
    let generate = GenerateConfig {
        n: cfg.synth.n,
        models: cfg.synth.models.clone(),
        grasp_table: grasp_table.clone(),
        correlation: cfg.synth.correlation,
        seed: cfg.seed,
    };
    let corpus = generate_trials(&generate)?;
    let data_dir = cfg.out_dir.join("data");
    fs::create_dir_all(&data_dir).map_err(io_data(&data_dir))?;
    let paths = write_corpus(&corpus, &grasp_table, &data_dir)?;

    // A ready-to-run config pointing at the generated corpus, with paths
    // relative to the config file itself.
    let mut config_text = String::new();
    config_text.push_str(&format!(
        "out_dir = \".\"\nseed = {}\ntrain_fraction = {}\n\n",
        cfg.seed, cfg.train_fraction
    ));
    config_text.push_str("grasps = \"data/grasps.toml\"\n\n");
    config_text.push_str("[corpora.synth]\nground_truth = \"data/gt\"\ntrials = \"data/trials.csv\"\n\n");
    config_text.push_str("[corpora.synth.estimates]\n");
    for estimator_id in paths.estimates.keys() {
        config_text.push_str(&format!(
            "{estimator_id} = \"data/estimates/{estimator_id}.csv\"\n"
        ));
    }
    config_text.push_str(&format!(
        "\n[train]\nepochs = {}\nlr_start = {}\nlr_end = {}\nbatch_size = {}\n",
        cfg.train.epochs, cfg.train.lr_start, cfg.train.lr_end, cfg.train.batch_size
    ));
    config_text.push_str(&format!(
        "\n[features]\ntranslation_scale_mm = {}\n",
        cfg.translation_scale_mm
    ));
    let config_path = cfg.out_dir.join("config.toml");
    fs::write(&config_path, config_text).map_err(io_data(&config_path))?;

    // Label-rate summary per (estimator, gripper).
    let mut counts: BTreeMap<(EstimatorId, GripperId), (usize, usize)> = BTreeMap::new();
    for trial in &corpus.trials {
        let entry = counts
            .entry((trial.estimator_id.clone(), trial.gripper_id.clone()))
            .or_default();
        entry.0 += usize::from(trial.success);
        entry.1 += 1;
    }
    println!(
        "generated {} keys -> {} trials under {}",
        corpus.ground_truth.len(),
        corpus.trials.len(),
        data_dir.display()
    );
    for ((estimator_id, gripper_id), (successes, total)) in counts {
        println!(
            "  {estimator_id:<10} {gripper_id:<14} success rate {:.3} ({successes}/{total})",
            successes as f64 / total as f64
        );
    }
    println!("wrote {}", config_path.display());
    Ok(())
}

pub fn cmd_ingest(cfg: &Config) -> CmdResult<()> {
    let corpus = load_corpus(cfg)?;
    print_warnings(&corpus.warnings);
    for (estimator_id, records) in &corpus.estimates {
        println!("{estimator_id:<10} {} estimate records", records.len());
    }
    println!("{} ground-truth records, {} trials", corpus.ground_truth.len(), corpus.trials.len());

    let (principals, grippers) = resolve_scope(cfg, &corpus)?;
    let joined = JoinedCorpora::build(&corpus, &principals, &grippers)?;
    for principal in &principals {
        for gripper in &grippers {
            let samples = joined.get(principal, gripper);
            let (total, successes) = corpus_summary(samples);
            let cache = write_join_cache(&cfg.out_dir, principal, gripper, samples)?;
            println!(
                "joined {total} samples (success rate {:.3}) for principal {principal}, gripper {gripper} -> {}",
                if total > 0 { successes as f64 / total as f64 } else { 0.0 },
                cache.display()
            );
        }
    }
    Ok(())
}

pub fn cmd_split(cfg: &Config) -> CmdResult<()> {
    let corpus = load_corpus(cfg)?;
    print_warnings(&corpus.warnings);
    let (principals, grippers) = resolve_scope(cfg, &corpus)?;
    let (joined, splits) = prepare_joined(cfg, &corpus, &principals, &grippers)?;
    for ((principal, gripper), assignment) in &splits {
        let samples = joined.get(principal, gripper);
        println!(
            "split {}: {} train / {} test of {} samples",
            crate::pipeline::split_path(&cfg.out_dir, principal, gripper).display(),
            assignment.count(graspcast_core::dataset::Split::Train),
            assignment.count(graspcast_core::dataset::Split::Test),
            samples.len()
        );
    }
    Ok(())
}

/// Executes runs, in parallel when `workers > 1`. Results keep run order.
fn execute_all(
    cfg: &Config,
    corpus: &LoadedCorpus,
    joined: &JoinedCorpora,
    splits_by_pe: &BTreeMap<EstimatorId, BTreeMap<GripperId, SplitAssignment>>,
    runs: &[RunSpec],
    dump_features: bool,
) -> CmdResult<Vec<crate::pipeline::RunSummary>> {
    let execute = |run: &RunSpec| {
        let splits = splits_by_pe
            .get(&run.principal)
            .ok_or_else(|| CmdError::internal(anyhow::anyhow!("no splits for {}", run.principal)))?;
        execute_run(cfg, corpus, joined, splits, run, dump_features)
    };
    if cfg.workers <= 1 || runs.len() <= 1 {
        runs.iter().map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| CmdError::internal(anyhow::anyhow!("thread pool: {e}")))?;
        pool.install(|| runs.par_iter().map(execute).collect())
    }
}

fn print_run_summaries(summaries: &[crate::pipeline::RunSummary]) {
    for summary in summaries {
        println!(
            "{} {:<40} train {:>5} test {:>5} checkpoint {:.3} @ epoch {:>4} (final {:.3})",
            if summary.reused { "reused " } else { "trained" },
            summary.name,
            summary.train_size,
            summary.test_size,
            summary.checkpoint_test_accuracy,
            summary.checkpoint_epoch,
            summary.final_test_accuracy
        );
    }
}

pub fn cmd_train(cfg: &Config, dump_features: bool) -> CmdResult<()> {
    let variant = cfg
        .variant
        .ok_or_else(|| CmdError::usage_msg("train needs --variant (mlp, mlp-o, mlp-g, mlp-og)"))?;
    let corpus = load_corpus(cfg)?;
    print_warnings(&corpus.warnings);
    let (principals, scope_grippers) = resolve_scope(cfg, &corpus)?;
    let grippers = run_grippers(variant, &scope_grippers, &corpus);
    if variant.spans_grippers() && grippers.len() < 2 {
        return Err(CmdError::usage_msg(format!(
            "variant {variant} trains across grippers, but the trials define only {}",
            grippers.len()
        )));
    }
    let (joined, splits) = prepare_joined(cfg, &corpus, &principals, &grippers)?;

    let mut runs = Vec::new();
    let mut splits_by_pe = BTreeMap::new();
    for principal in &principals {
        let objects_by_gripper: BTreeMap<GripperId, Vec<u32>> = grippers
            .iter()
            .map(|g| (g.clone(), crate::pipeline::objects_of(joined.get(principal, g))))
            .collect();
        runs.extend(runs_for(variant, principal, &grippers, &objects_by_gripper));
        splits_by_pe.insert(principal.clone(), splits_for_principal(&splits, principal));
    }
    let summaries = execute_all(cfg, &corpus, &joined, &splits_by_pe, &runs, dump_features)?;
    print_run_summaries(&summaries);
    Ok(())
}

pub fn cmd_baseline(cfg: &Config) -> CmdResult<()> {
    let corpus = load_corpus(cfg)?;
    print_warnings(&corpus.warnings);
    let (principals, grippers) = resolve_scope(cfg, &corpus)?;
    let (joined, splits) = prepare_joined(cfg, &corpus, &principals, &grippers)?;
    for principal in &principals {
        let pe_splits = splits_for_principal(&splits, principal);
        for gripper in &grippers {
            let models = learn_baseline(cfg, &corpus, &joined, &pe_splits, principal, gripper)?;
            let mean_acc =
                models.iter().map(|m| m.train_accuracy).sum::<f64>() / models.len().max(1) as f64;
            println!(
                "baseline {principal}/{gripper}: {} per-object thresholds, mean train accuracy {:.3} -> {}",
                models.len(),
                mean_acc,
                crate::pipeline::thresholds_path(&cfg.out_dir, principal, gripper).display()
            );
        }
    }
    Ok(())
}

/// Shared by eval and report: evaluates the requested methods over the
/// scope and writes the report files.
#[allow(clippy::too_many_arguments)]
fn evaluate_and_write(
    cfg: &Config,
    corpus: &LoadedCorpus,
    joined: &JoinedCorpora,
    splits: &BTreeMap<(EstimatorId, GripperId), SplitAssignment>,
    methods: &[Method],
    principals: &[EstimatorId],
    grippers: &[GripperId],
    include_corpus_tables: bool,
) -> CmdResult<Vec<EvalResult>> {
    let mut results = Vec::new();
    for principal in principals {
        let pe_splits = splits_for_principal(splits, principal);
        for gripper in grippers {
            for method in methods {
                results.extend(evaluate_cell(
                    cfg, corpus, joined, &pe_splits, *method, principal, gripper,
                )?);
            }
        }
    }

    let reports_dir = cfg.out_dir.join("reports");
    fs::create_dir_all(&reports_dir).map_err(io_data(&reports_dir))?;
    write_eval_csv(&results, &reports_dir.join("eval_results.csv"))?;

    let improvements = if methods.contains(&Method::Baseline) && methods.len() > 1 {
        let rows = improvement_summary(&results)?;
        write_improvement_csv(&rows, &reports_dir.join("improvements.csv"))?;
        rows
    } else {
        Vec::new()
    };

    let (success_rates, pose_errors) = if include_corpus_tables {
        let rates = grasp_success_table(&corpus.trials);
        write_success_csv(&rates, &reports_dir.join("success_rates.csv"))?;
        let errors = pose_error_table(
            &corpus.estimates,
            &corpus.ground_truth,
            &corpus.dataset_of_object,
        );
        write_pose_error_csv(&errors, &reports_dir.join("pose_errors.csv"))?;
        (rates, errors)
    } else {
        (Vec::new(), Vec::new())
    };

    let tables = render_tables(&results, &improvements, &success_rates, &pose_errors);
    fs::write(reports_dir.join("tables.txt"), &tables)
        .map_err(io_data(&reports_dir.join("tables.txt")))?;
    print!("{tables}");
    println!("reports written to {}", reports_dir.display());
    Ok(results)
}

pub fn cmd_eval(cfg: &Config, method_names: &[String]) -> CmdResult<()> {
    let methods: Vec<Method> = if method_names.is_empty() {
        Method::ALL.to_vec()
    } else {
        method_names
            .iter()
            .map(|name| {
                Method::parse(name)
                    .ok_or_else(|| CmdError::usage_msg(format!("unknown method {name:?}")))
            })
            .collect::<CmdResult<_>>()?
    };
    let corpus = load_corpus(cfg)?;
    print_warnings(&corpus.warnings);
    let (principals, grippers) = resolve_scope(cfg, &corpus)?;
    // Spanning variants also need the splits of out-of-scope grippers.
    let all_grippers = corpus.gripper_ids();
    let needs_all = methods
        .iter()
        .any(|m| matches!(m, Method::Mlp(v) if v.spans_grippers()));
    let join_grippers = if needs_all { &all_grippers } else { &grippers };
    let (joined, splits) = prepare_joined(cfg, &corpus, &principals, join_grippers)?;
    evaluate_and_write(
        cfg, &corpus, &joined, &splits, &methods, &principals, &grippers, false,
    )?;
    Ok(())
}

pub fn cmd_report(cfg: &Config) -> CmdResult<()> {
    let corpus = load_corpus(cfg)?;
    print_warnings(&corpus.warnings);
    let (principals, scope_grippers) = resolve_scope(cfg, &corpus)?;
    let all_grippers = corpus.gripper_ids();
    let spanning_possible = all_grippers.len() >= 2;
    let variants: Vec<Variant> = Variant::ALL
        .into_iter()
        .filter(|v| spanning_possible || !v.spans_grippers())
        .collect();

    let (joined, splits) = prepare_joined(cfg, &corpus, &principals, &all_grippers)?;
    let mut runs = Vec::new();
    let mut splits_by_pe = BTreeMap::new();
    for principal in &principals {
        for &variant in &variants {
            let grippers = run_grippers(variant, &scope_grippers, &corpus);
            let objects_by_gripper: BTreeMap<GripperId, Vec<u32>> = grippers
                .iter()
                .map(|g| (g.clone(), crate::pipeline::objects_of(joined.get(principal, g))))
                .collect();
            runs.extend(runs_for(variant, principal, &grippers, &objects_by_gripper));
        }
        splits_by_pe.insert(principal.clone(), splits_for_principal(&splits, principal));
    }
    println!(
        "training grid: {} runs over {} principal(s), {} variant(s), workers {}",
        runs.len(),
        principals.len(),
        variants.len(),
        cfg.workers
    );
    let summaries = execute_all(cfg, &corpus, &joined, &splits_by_pe, &runs, false)?;
    print_run_summaries(&summaries);

    for principal in &principals {
        let pe_splits = splits_by_pe.get(principal).unwrap();
        for gripper in &scope_grippers {
            learn_baseline(cfg, &corpus, &joined, pe_splits, principal, gripper)?;
        }
    }

    let methods: Vec<Method> = std::iter::once(Method::Baseline)
        .chain(variants.iter().map(|v| Method::Mlp(*v)))
        .collect();
    let results = evaluate_and_write(
        cfg,
        &corpus,
        &joined,
        &splits,
        &methods,
        &principals,
        &scope_grippers,
        true,
    )?;

    // One-line cell digest for quick scanning.
    for cell in cell_accuracies(&results) {
        println!(
            "cell {:<9} {}/{}: object-mean {:.3}, pooled {:.3} over {} samples",
            cell.method.as_str(),
            cell.principal_id,
            cell.gripper_id,
            cell.object_mean,
            cell.pooled,
            cell.sample_count
        );
    }
    Ok(())
}
