use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use suppes_core::caprese::{reconstruct_tree_lenient, reconstruct_tree_with};
use suppes_core::capri::reconstruct_lenient;
use suppes_core::confidence::{
    nonparametric_bootstrap, parametric_bootstrap, statistical_bootstrap, truth_from_model, truth_from_tree,
};
use suppes_core::eval::{evaluate, ROOT_LABEL};
use suppes_core::patterns::parse_hypotheses;
use suppes_core::rng::derive_seed;
use suppes_core::sbcn::{
    berkeley_order, berkeley_table, binarize, explainable_fraction, generalized_score, group_discrimination,
    learn_sbcn, CategoricalTable, SbcnParams, TemporalOrder,
};
use suppes_core::synthgen::{apply_noise, random_dag, random_tree, sample_dataset};
use suppes_core::{
    reconstruct, reconstruct_tree, Algo, BootstrapKind, EdgeSet, EvalReport, GenotypeMatrix, GroundTruth, Hypothesis,
    Error, ModelDoc, StructureKind, TopologySpec, TreeSelection, WalkScores,
};

use crate::output::{dot_path, read_matrix, read_text, write_atomic, write_json, write_matrix, CliError, CliResult};
use crate::{AlgoArg, BootstrapArgs, CapreseArgs, CapriArgs, CapriOpts, Cli, Command, SbcnArgs, SweepArgs, SynthArgs};

pub fn run(cli: Cli) -> CliResult<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Validate { input, out } => validate(&input, &out),
        Command::Caprese(args) => caprese(&args, seed),
        Command::Capri(args) => capri(&args, seed),
        Command::Bootstrap(args) => bootstrap(&args, seed),
        Command::Synth(args) => synth(&args, seed),
        Command::Eval { inferred, truth, out } => eval(&inferred, &truth, &out),
        Command::Sbcn(args) => sbcn(&args, seed),
        Command::Sweep(args) => sweep(&args, seed),
    }
}

fn validate(input: &Path, out: &Path) -> CliResult<()> {
    let m = read_matrix(input)?;
    let report = m.consolidate();
    write_json(out, &report)?;
    if report.is_consolidated() {
        Ok(())
    } else {
        let names: Vec<String> = report.flagged().iter().map(|&e| m.events()[e.0].header()).collect();
        Err(CliError::Data(format!("not consolidated: {}", names.join(", "))))
    }
}

fn write_model(out: &Path, doc: &ModelDoc) -> CliResult<()> {
    write_atomic(out, doc.to_json()?.as_bytes())?;
    if out != Path::new("-") {
        write_atomic(&dot_path(out), doc.to_dot().as_bytes())?;
    }
    Ok(())
}

fn caprese(args: &CapreseArgs, seed: u64) -> CliResult<()> {
    let m = read_matrix(&args.input)?;
    let tree = if args.lenient {
        reconstruct_tree_lenient(&m, args.lambda, args.selection.into())?.0
    } else {
        reconstruct_tree_with(&m, args.lambda, args.selection.into())?
    };
    write_model(&args.out, &ModelDoc::from_tree(&tree, Some(seed)))
}

fn load_hypotheses(opts: &CapriOpts, m: &GenotypeMatrix) -> CliResult<Vec<Hypothesis>> {
    match &opts.hypotheses {
        Some(path) => Ok(parse_hypotheses(&read_text(path)?, m)?),
        None => Ok(Vec::new()),
    }
}

fn capri(args: &CapriArgs, seed: u64) -> CliResult<()> {
    let m = read_matrix(&args.input)?;
    let params = args.opts.params(seed);
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let docs: Vec<ModelDoc> = if args.lenient {
        if args.opts.hypotheses.is_some() {
            return Err(CliError::Usage("--lenient does not take hypotheses".into()));
        }
        let (models, _) = reconstruct_lenient(&m, &params)?;
        models.iter().map(|pm| ModelDoc::from_model(pm, Some(seed))).collect()
    } else {
        let hyps = load_hypotheses(&args.opts, &m)?;
        let result = reconstruct(&m, &hyps, &params)?;
        (0..result.models.len())
            .map(|k| ModelDoc::from_capri(&result, k, Some(seed)))
            .collect::<Result<_, _>>()?
    };
    for (doc, reg) in docs.iter().zip(&params.regularizers) {
        write_model(&args.out_dir.join(format!("capri-{}.json", reg.name())), doc)?;
    }
    Ok(())
}

fn read_truth(path: &Path) -> CliResult<GroundTruth> {
    let text = read_text(path)?;
    let gt: GroundTruth =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    gt.validate()?;
    Ok(gt)
}

fn bootstrap(args: &BootstrapArgs, seed: u64) -> CliResult<()> {
    let m = read_matrix(&args.input)?;
    let params = args.capri.params(seed);
    let algo = match args.algo {
        AlgoArg::Caprese => Algo::Caprese { lambda: args.lambda },
        AlgoArg::Capri => Algo::Capri {
            params: params.clone(),
            hypotheses: load_hypotheses(&args.capri, &m)?,
        },
    };
    let reports = match BootstrapKind::from(args.kind) {
        BootstrapKind::Nonparametric => nonparametric_bootstrap(&m, &algo, args.iterations, seed)?,
        BootstrapKind::Statistical => {
            let Algo::Capri { params, hypotheses } = &algo else {
                return Err(CliError::Usage("the statistical bootstrap needs --algo capri".into()));
            };
            statistical_bootstrap(&m, params, hypotheses, args.iterations, seed)?
        }
        BootstrapKind::Parametric => {
            let truth = match &args.truth {
                Some(path) => read_truth(path)?,
                None => match &algo {
                    Algo::Caprese { lambda } => truth_from_tree(&reconstruct_tree(&m, *lambda)?, &m)?,
                    Algo::Capri { params, hypotheses } => {
                        truth_from_model(&reconstruct(&m, hypotheses, params)?.models[0])?
                    }
                },
            };
            let rows = args.rows.unwrap_or(m.n_samples());
            parametric_bootstrap(&truth, rows, args.eps_plus, args.eps_minus, &algo, args.iterations, seed)?
        }
    };
    write_json(&args.out, &reports)
}

fn synth(args: &SynthArgs, seed: u64) -> CliResult<()> {
    let spec = TopologySpec {
        n_events: args.events,
        kind: args.kind.into(),
        max_parents: max_parents(args.kind.into(), args.max_parents),
        p_min: args.p_min,
        p_max: args.p_max,
        components: args.components,
        disjunctive: args.disjunctive,
        seed,
    };
    let gt = generate(&spec)?;
    write_json(&args.truth_out, &gt)?;
    match (&args.data_out, args.rows) {
        (Some(path), rows) if rows > 0 => {
            let data = sample_dataset(&gt, rows, derive_seed(seed, 1))?;
            let data = if args.noise > 0.0 {
                apply_noise(&data, args.noise, derive_seed(seed, 2))?
            } else {
                data
            };
            write_matrix(path, &data)
        }
        (Some(_), _) => Err(CliError::Usage("--data-out needs --rows above 0".into())),
        (None, _) => Ok(()),
    }
}

fn max_parents(kind: StructureKind, requested: usize) -> usize {
    if kind.is_tree_like() {
        1
    } else {
        requested
    }
}

fn generate(spec: &TopologySpec) -> CliResult<GroundTruth> {
    Ok(if spec.kind.is_tree_like() {
        random_tree(spec)?
    } else {
        random_dag(spec)?
    })
}

/// Model JSON, or ground-truth JSON converted to the same form.
fn read_model_or_truth(path: &Path) -> CliResult<ModelDoc> {
    let text = read_text(path)?;
    if let Ok(doc) = ModelDoc::from_json(&text) {
        return Ok(doc);
    }
    match serde_json::from_str::<GroundTruth>(&text) {
        Ok(gt) => {
            gt.validate()?;
            Ok(ModelDoc::from_truth(&gt))
        }
        Err(_) => Err(CliError::Data(format!("{} is neither a model nor a ground truth", path.display()))),
    }
}

fn without_root(mut s: EdgeSet) -> EdgeSet {
    s.edges.retain(|(from, _)| from != ROOT_LABEL);
    s
}

/// Compares edge sets; root edges only count when both sides are trees.
fn compare(inferred: EdgeSet, truth: EdgeSet, both_trees: bool) -> CliResult<EvalReport> {
    Ok(if both_trees {
        evaluate(&inferred, &truth)?
    } else {
        evaluate(&without_root(inferred), &without_root(truth))?
    })
}

fn eval(inferred: &Path, truth: &Path, out: &Path) -> CliResult<()> {
    let a = read_model_or_truth(inferred)?;
    let b = read_model_or_truth(truth)?;
    let report = compare(a.edge_set(), b.edge_set(), a.structure == b.structure)?;
    write_json(out, &report)
}

#[derive(Serialize)]
struct GroupScores {
    group: String,
    walks: WalkScores,
    gds: f64,
    /// Null when no walk from the group reaches the negative decision.
    fed: Option<f64>,
}

fn sbcn(args: &SbcnArgs, seed: u64) -> CliResult<()> {
    let (table, order) = match (&args.table, &args.order) {
        (Some(t), Some(o)) => (
            CategoricalTable::import(t).map_err(|e| CliError::Data(format!("{}: {e}", t.display())))?,
            TemporalOrder::from_json(&read_text(o)?)?,
        ),
        (None, None) => (berkeley_table(), berkeley_order()),
        _ => return Err(CliError::Usage("--table and --order go together".into())),
    };
    let (m, levels) = binarize(&table, &order)?;
    let params = SbcnParams {
        regularizer: args.regularizer.0,
        max_iter: args.max_iter,
        restarts: args.restarts,
        seed,
    };
    let s = learn_sbcn(&m, &levels, m.find(&args.negative)?, m.find(&args.positive)?, &params)?;
    write_json(&args.out, &s)?;

    let Some(scores_out) = &args.scores_out else {
        return Ok(());
    };
    let mediators = args.mediators.iter().map(|l| s.find(l)).collect::<Result<Vec<_>, _>>()?;
    let mut scores = Vec::new();
    for (k, label) in args.groups.iter().enumerate() {
        let v = s.find(label)?;
        let walk_seed = derive_seed(seed, k as u64);
        scores.push(GroupScores {
            group: label.clone(),
            walks: group_discrimination(&s, v, args.walks, walk_seed)?,
            gds: generalized_score(&s, &[v], args.damping)?,
            fed: if mediators.is_empty() {
                None
            } else {
                match explainable_fraction(&s, v, &mediators, args.walks, walk_seed) {
                    Ok(f) => Some(f),
                    Err(Error::Undefined(_)) => None,
                    Err(e) => return Err(e.into()),
                }
            },
        });
    }
    write_json(scores_out, &scores)
}

fn sweep(args: &SweepArgs, seed: u64) -> CliResult<()> {
    let mut csv = format!("rows,noise,instance,dataset,{}\n", EvalReport::CSV_HEADER);
    let params = suppes_core::CapriParams {
        regularizers: vec![args.regularizer.0],
        seed,
        ..Default::default()
    };
    for i in 0..args.instances {
        let spec = TopologySpec {
            n_events: args.events,
            kind: args.kind.into(),
            max_parents: max_parents(args.kind.into(), args.max_parents),
            components: args.components,
            seed: derive_seed(seed, i as u64),
            ..TopologySpec::tree(args.events, 0)
        };
        let gt = generate(&spec)?;
        let truth = EdgeSet::from_truth(&gt);
        for &rows in &args.rows {
            for (ni, &nu) in args.noise.iter().enumerate() {
                for d in 0..args.datasets {
                    let data_seed = derive_seed(derive_seed(derive_seed(seed, 1_000_000 + i as u64), rows as u64), (ni * args.datasets + d) as u64);
                    let clean = sample_dataset(&gt, rows, data_seed)?;
                    let data = if nu > 0.0 { apply_noise(&clean, nu, derive_seed(data_seed, 1))? } else { clean };
                    let report = match args.algo {
                        AlgoArg::Caprese => {
                            let (tree, _) = reconstruct_tree_lenient(&data, args.lambda, TreeSelection::PerNode)?;
                            compare(EdgeSet::from_tree(&tree), truth.clone(), gt.kind.is_tree_like())?
                        }
                        AlgoArg::Capri => {
                            let (models, _) = reconstruct_lenient(&data, &params)?;
                            compare(EdgeSet::from_model(&models[0]), truth.clone(), false)?
                        }
                    };
                    let _ = writeln!(csv, "{rows},{nu},{i},{d},{}", report.csv_row());
                }
            }
        }
    }
    write_atomic(&args.out, csv.as_bytes())
}
