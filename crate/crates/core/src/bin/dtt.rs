use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use digital_twins::data::TrioDataset;
use digital_twins::experiments::{
    discoveries, fit_external, per_snp_tdt, run_admixed_demo, run_confounded_demo, AdmixedDemoSpec,
    LassoSettings,
};
use digital_twins::hmm::{GeneticMap, HmmParams, Interval};
use digital_twins::io::{
    load_dataset, load_groups, read_gwas, read_model, read_result_table, save_dataset, write_gwas,
    write_manhattan_csv, write_model, write_result_table, DatasetPaths, GroupSpec, Manifest,
    ResultRow, ResultTable,
};
use digital_twins::multiple_testing::Procedure;
use digital_twins::simulator::{simulate_study, MixingDesign, StudySpec};
use digital_twins::statistics::{
    group_weights, order_by_weight, Family, FittedModel, LambdaPath, LossStatistic, Statistic,
    TdtStatistic,
};
use digital_twins::twin_tests::{
    digital_twin_test, local_dtt_groups, local_dtt_independent, PValueEntry, PValueTable,
    TiePolicy, TwinTestConfig,
};
use digital_twins::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dtt",
    version,
    about = "Digital twin tests for parent-offspring trio data"
)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trio cohort, its trait and an optional external study.
    Simulate(SimulateArgs),
    /// Fit a cross-validated lasso on an external association study.
    Fit(FitArgs),
    /// Global test of each chromosome.
    Dtt(DttArgs),
    /// Local test of each group.
    Ldtt(LocalArgs),
    /// Local tests with mutually independent p-values.
    LdttIndep(LocalArgs),
    /// Per-SNP analytic transmission disequilibrium test.
    Tdt(TdtArgs),
    /// Turn the p-values of a result table into discoveries.
    Combine(CombineArgs),
    /// Spurious TDT discoveries in an admixed population.
    DemoAdmixed(DemoAdmixedArgs),
    /// The eight-subject example where a permutation test fails.
    DemoConfounded(DemoConfoundedArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Directory with map.tsv, haplotypes.txt (or .dttb), pedigree.tsv and phenotype.tsv.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    haplotypes: Option<PathBuf>,
    #[arg(long)]
    pedigree: Option<PathBuf>,
    #[arg(long)]
    phenotype: Option<PathBuf>,
    /// Mutation probability of the inheritance model.
    #[arg(long)]
    epsilon: Option<f64>,
}

impl DataArgs {
    fn paths(&self) -> Result<DatasetPaths> {
        let base = match &self.data {
            Some(dir) => {
                let text = DatasetPaths::in_dir(dir);
                if text.haplotypes.exists() {
                    Some(text)
                } else {
                    Some(text.packed())
                }
            }
            None => None,
        };
        let pick = |own: &Option<PathBuf>, from: Option<&PathBuf>, what: &str| {
            own.clone()
                .or_else(|| from.cloned())
                .ok_or_else(|| Error::Input(format!("--{what} or --data is required")))
        };
        Ok(DatasetPaths {
            map: pick(&self.map, base.as_ref().map(|b| &b.map), "map")?,
            haplotypes: pick(
                &self.haplotypes,
                base.as_ref().map(|b| &b.haplotypes),
                "haplotypes",
            )?,
            pedigree: pick(
                &self.pedigree,
                base.as_ref().map(|b| &b.pedigree),
                "pedigree",
            )?,
            phenotype: pick(
                &self.phenotype,
                base.as_ref().map(|b| &b.phenotype),
                "phenotype",
            )?,
        })
    }

    fn load(&self) -> Result<(TrioDataset, Vec<String>)> {
        let paths = self.paths()?;
        let params = match self.epsilon {
            Some(e) => HmmParams::with_epsilon(e)?,
            None => HmmParams::default(),
        };
        let data = load_dataset(&paths, params)?;
        let inputs = [
            &paths.map,
            &paths.haplotypes,
            &paths.pedigree,
            &paths.phenotype,
        ]
        .iter()
        .map(|p| p.display().to_string())
        .collect();
        Ok((data, inputs))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PopModel {
    Homogeneous,
    Structured,
    Admixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraitKind {
    Binary,
    Continuous,
}

#[derive(Args)]
struct SimulateArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Number of trios.
    #[arg(long, default_value_t = 300)]
    n: usize,
    /// Sites per chromosome.
    #[arg(long, default_value_t = 1000)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    chromosomes: u32,
    /// Genetic length of each chromosome in Morgans.
    #[arg(long, default_value_t = 1.0)]
    morgans: f64,
    /// Physical length of each chromosome in base pairs.
    #[arg(long, default_value_t = 63_000_000)]
    bp: u64,
    #[arg(long, value_enum, default_value = "homogeneous")]
    pop_model: PopModel,
    #[arg(long, default_value_t = 0.1)]
    fst: f64,
    #[arg(long, default_value_t = 0.0)]
    h2: f64,
    #[arg(long, default_value_t = 0.5)]
    prevalence: f64,
    #[arg(long, default_value_t = 10)]
    causal: usize,
    #[arg(long = "trait", value_enum, default_value = "binary")]
    trait_kind: TraitKind,
    /// Size of the external association study; 0 for none.
    #[arg(long, default_value_t = 0)]
    external: usize,
    /// Write haplotypes in the packed binary format.
    #[arg(long)]
    packed: bool,
}

#[derive(Args)]
struct LassoArgs {
    /// Fit at this single penalty instead of cross-validating a path.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 100)]
    lambda_count: usize,
    #[arg(long, default_value_t = 1e-3)]
    lambda_min_ratio: f64,
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

impl LassoArgs {
    fn settings(&self) -> LassoSettings {
        LassoSettings {
            path: match self.lambda {
                Some(l) => LambdaPath::Explicit(vec![l]),
                None => LambdaPath::Auto {
                    count: self.lambda_count,
                    min_ratio: self.lambda_min_ratio,
                },
            },
            folds: self.folds,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// External study written by `simulate --external`.
    #[arg(long)]
    gwas: PathBuf,
    /// Model JSON to write.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    lasso: LassoArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatKind {
    Tdt,
    Loss,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ties {
    Randomized,
    Conservative,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "tdt")]
    stat: StatKind,
    /// Model JSON for the loss statistic.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Number of digital twins.
    #[arg(short = 'K', long = "replicates", default_value_t = 99)]
    replicates: usize,
    #[arg(long, value_enum, default_value = "randomized")]
    ties: Ties,
    /// Result table to write; the manifest goes next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DttArgs {
    #[command(flatten)]
    test: TestArgs,
    /// Test only this chromosome.
    #[arg(long)]
    chrom: Option<u32>,
}

#[derive(Args)]
struct LocalArgs {
    #[command(flatten)]
    test: TestArgs,
    /// Groups file (`group_id chrom start_bp end_bp`).
    #[arg(
        long,
        conflicts_with = "group_size",
        required_unless_present = "group_size"
    )]
    groups: Option<PathBuf>,
    /// Split every chromosome into windows of this many base pairs.
    #[arg(long)]
    group_size: Option<u64>,
    /// Also mark discoveries with this procedure.
    #[arg(long, value_parser = parse_procedure)]
    method: Option<Procedure>,
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Threshold parameter of the ordered procedures.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct TdtArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write `chrom,pos,neg_log10_p` for a Manhattan plot.
    #[arg(long)]
    manhattan: Option<PathBuf>,
}

#[derive(Args)]
struct CombineArgs {
    /// Result table to read.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_procedure)]
    method: Procedure,
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DemoAdmixedArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    external: usize,
    #[arg(long, default_value_t = 400)]
    p: usize,
    #[arg(long, default_value_t = 0.18)]
    h2: f64,
    #[arg(short = 'K', long = "replicates", default_value_t = 99)]
    replicates: usize,
    /// Local result table to write; the TDT Manhattan CSV and manifest go next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DemoConfoundedArgs {
    #[arg(short = 'K', long = "replicates", default_value_t = 999)]
    replicates: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_procedure(s: &str) -> std::result::Result<Procedure, String> {
    Procedure::from_name(s)
        .ok_or_else(|| format!("unknown method `{s}`; use bonferroni, bh, accumulation or seqstep"))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn finish(manifest: Manifest, out: &Path) -> Result<()> {
    manifest.write(with_suffix(out, ".manifest.json"))
}

/// Coefficients of `model` rearranged to the dataset's site order.
fn align_model(ids: &[String], model: FittedModel, data: &TrioDataset) -> Result<FittedModel> {
    let position: HashMap<&str, usize> = data
        .map
        .sites()
        .iter()
        .enumerate()
        .map(|(j, s)| (s.id.as_str(), j))
        .collect();
    let mut coefficients = vec![0.0; data.p()];
    for (id, &b) in ids.iter().zip(&model.coefficients) {
        match position.get(id.as_str()) {
            Some(&j) => coefficients[j] = b,
            None if b == 0.0 => {}
            None => return Err(Error::Input(format!("model site `{id}` is not in the map"))),
        }
    }
    Ok(FittedModel {
        coefficients,
        ..model
    })
}

fn statistic(
    args: &TestArgs,
    data: &TrioDataset,
) -> Result<(Box<dyn Statistic>, Option<FittedModel>)> {
    match args.stat {
        StatKind::Tdt => Ok((Box::new(TdtStatistic), None)),
        StatKind::Loss => {
            let path = args
                .model
                .as_ref()
                .ok_or_else(|| Error::Input("--stat loss needs --model".into()))?;
            let (ids, model) = read_model(path)?;
            let model = align_model(&ids, model, data)?;
            Ok((Box::new(LossStatistic::new(model.clone())), Some(model)))
        }
    }
}

fn config(args: &TestArgs, seed: u64) -> TwinTestConfig {
    let ties = match args.ties {
        Ties::Randomized => TiePolicy::Randomized,
        Ties::Conservative => TiePolicy::Conservative,
    };
    TwinTestConfig::new(args.replicates, seed).with_tie_policy(ties)
}

fn test_manifest(name: &str, cli: &Cli, args: &TestArgs, mut inputs: Vec<String>) -> Manifest {
    if let Some(m) = &args.model {
        inputs.push(m.display().to_string());
    }
    let mut m = Manifest::new(name, cli.seed, rayon::current_num_threads())
        .param(
            "stat",
            match args.stat {
                StatKind::Tdt => "tdt",
                StatKind::Loss => "loss",
            },
        )
        .param("replicates", args.replicates)
        .param(
            "ties",
            match args.ties {
                Ties::Randomized => "randomized",
                Ties::Conservative => "conservative",
            },
        );
    m.inputs = inputs;
    m.outputs = vec![args.out.display().to_string()];
    m
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let spec = StudySpec {
        n_trios: a.n,
        n_external: a.external,
        layout: (1..=a.chromosomes)
            .map(|c| (c, a.p, a.morgans, a.bp))
            .collect(),
        design: match a.pop_model {
            PopModel::Homogeneous => MixingDesign::Homogeneous,
            PopModel::Structured => MixingDesign::Structured,
            PopModel::Admixed => MixingDesign::AdmixedF2,
        },
        fst: a.fst,
        n_causal: a.causal,
        h2: a.h2,
        prevalence: a.prevalence,
        family: match a.trait_kind {
            TraitKind::Binary => Family::BinaryLogistic,
            TraitKind::Continuous => Family::GaussianLinear,
        },
        ..StudySpec::default()
    };
    let study = simulate_study(&spec, cli.seed)?;
    let mut paths = DatasetPaths::in_dir(&a.out);
    if a.packed {
        paths = paths.packed();
    }
    save_dataset(&paths, &study.dataset)?;
    let ids: Vec<String> = study
        .dataset
        .map
        .sites()
        .iter()
        .map(|s| s.id.clone())
        .collect();
    let mut outputs: Vec<String> = [
        &paths.map,
        &paths.haplotypes,
        &paths.pedigree,
        &paths.phenotype,
    ]
    .iter()
    .map(|p| p.display().to_string())
    .collect();
    let causal_path = a.out.join("causal.tsv");
    let mut causal = String::from("site_id\tcoefficient\n");
    for &j in &study.causal {
        causal.push_str(&format!(
            "{}\t{}\n",
            ids[j], study.trait_model.coefficients[j]
        ));
    }
    std::fs::write(&causal_path, causal).map_err(|e| Error::Io {
        path: causal_path.display().to_string(),
        source: e,
    })?;
    outputs.push(causal_path.display().to_string());
    if let Some(gwas) = &study.external {
        let path = a.out.join("gwas.tsv");
        write_gwas(&path, &ids, gwas)?;
        outputs.push(path.display().to_string());
    }
    let mut m = Manifest::new("simulate", cli.seed, rayon::current_num_threads())
        .param("n", a.n)
        .param("p", a.p)
        .param("chromosomes", a.chromosomes)
        .param("design", spec.design)
        .param("fst", a.fst)
        .param("h2", a.h2)
        .param("prevalence", a.prevalence)
        .param("causal", a.causal)
        .param("family", spec.family.name())
        .param("external", a.external)
        .param("intercept", study.trait_model.intercept)
        .param("noise_sd", study.trait_model.noise_sd);
    m.outputs = outputs;
    m.write(a.out.join("manifest.json"))?;
    println!(
        "simulated {} trios at {} sites with {} causal sites into {}",
        a.n,
        study.dataset.p(),
        study.causal.len(),
        a.out.display()
    );
    Ok(())
}

fn fit(cli: &Cli, a: &FitArgs) -> Result<()> {
    let (ids, gwas) = read_gwas(&a.gwas)?;
    let settings = a.lasso.settings();
    let model = fit_external(&gwas, &settings, cli.seed)?;
    write_model(&a.out, &ids, &model)?;
    let nonzero = model.coefficients.iter().filter(|b| **b != 0.0).count();
    let mut m = Manifest::new("fit", cli.seed, rayon::current_num_threads())
        .param("lambda", model.lambda)
        .param("folds", settings.folds)
        .param("nonzero", nonzero);
    m.inputs = vec![a.gwas.display().to_string()];
    m.outputs = vec![a.out.display().to_string()];
    finish(m, &a.out)?;
    println!(
        "lambda {} with {nonzero} nonzero coefficients",
        model.lambda
    );
    Ok(())
}

fn dtt(cli: &Cli, a: &DttArgs) -> Result<()> {
    let (data, inputs) = a.test.data.load()?;
    let (stat, _) = statistic(&a.test, &data)?;
    let cfg = config(&a.test, cli.seed);
    let chromosomes: Vec<_> = data
        .map
        .chromosomes()
        .iter()
        .copied()
        .filter(|r| a.chrom.is_none_or(|c| c == r.chromosome))
        .collect();
    if chromosomes.is_empty() {
        return Err(Error::Input(format!(
            "chromosome {} is not in the map",
            a.chrom.unwrap_or(0)
        )));
    }
    let mut rows = Vec::new();
    for r in chromosomes {
        let out = digital_twin_test(&data, r.chromosome, stat.as_ref(), &cfg)?;
        let (first, last) = (data.map.site(r.start), data.map.site(r.end - 1));
        rows.push(ResultRow {
            group_id: format!("chr{}", r.chromosome),
            chrom: r.chromosome,
            start_bp: first.physical_pos,
            end_bp: last.physical_pos,
            p_value: out.p_value,
            weight: 0.0,
            rejected: false,
            procedure: "none".into(),
        });
        println!("chromosome {}: p = {}", r.chromosome, out.p_value);
    }
    let mut table = ResultTable { rows };
    table.sort();
    write_result_table(&a.test.out, &table)?;
    let m = test_manifest("dtt", cli, &a.test, inputs).param("chrom", a.chrom);
    finish(m, &a.test.out)
}

fn local(cli: &Cli, a: &LocalArgs, independent: bool) -> Result<()> {
    let (data, mut inputs) = a.test.data.load()?;
    let spec = match (&a.groups, a.group_size) {
        (Some(p), _) => {
            inputs.push(p.display().to_string());
            GroupSpec::File(p.clone())
        }
        (None, Some(w)) => GroupSpec::Width(w),
        (None, None) => return Err(Error::Input("--groups or --group-size is required".into())),
    };
    let partition = load_groups(&spec, &data.map)?;
    let (stat, model) = statistic(&a.test, &data)?;
    let cfg = config(&a.test, cli.seed);
    let mut table = if independent {
        local_dtt_independent(&data, &partition, stat.as_ref(), &cfg)?
    } else {
        local_dtt_groups(&data, &partition, stat.as_ref(), &cfg)?
    };
    if let Some(model) = &model {
        table = table.with_weights(&group_weights(model, &partition))?;
    }
    let set = match a.method {
        Some(proc) => Some(discoveries(
            proc,
            &table.p_values(),
            &order_by_weight(&table.weights()),
            a.alpha,
            a.c,
        )?),
        None => None,
    };
    let result = ResultTable::from_pvalues(&table, &data.map, set.as_ref());
    write_result_table(&a.test.out, &result)?;
    if let Some(set) = &set {
        println!(
            "{} of {} groups rejected by {}",
            set.len(),
            table.len(),
            set.procedure.name()
        );
    } else {
        println!("{} groups tested", table.len());
    }
    let name = if independent { "ldtt-indep" } else { "ldtt" };
    let m = test_manifest(name, cli, &a.test, inputs)
        .param(
            "groups",
            match &spec {
                GroupSpec::File(p) => p.display().to_string(),
                GroupSpec::Width(w) => format!("{w} bp"),
            },
        )
        .param("method", a.method.map(|p| p.name()))
        .param("alpha", a.alpha)
        .param("c", a.c);
    finish(m, &a.test.out)
}

fn tdt(cli: &Cli, a: &TdtArgs) -> Result<()> {
    let (data, inputs) = a.data.load()?;
    let pvals = per_snp_tdt(&data)?;
    let rows = data
        .map
        .sites()
        .iter()
        .zip(&pvals)
        .map(|(s, &p)| ResultRow {
            group_id: s.id.clone(),
            chrom: s.chromosome,
            start_bp: s.physical_pos,
            end_bp: s.physical_pos,
            p_value: p,
            weight: 0.0,
            rejected: false,
            procedure: "none".into(),
        })
        .collect();
    let mut table = ResultTable { rows };
    table.sort();
    write_result_table(&a.out, &table)?;
    let mut outputs = vec![a.out.display().to_string()];
    if let Some(path) = &a.manhattan {
        let points: Vec<_> = data
            .map
            .sites()
            .iter()
            .zip(&pvals)
            .map(|(s, &p)| (s.chromosome, s.physical_pos, p))
            .collect();
        write_manhattan_csv(path, &points)?;
        outputs.push(path.display().to_string());
    }
    let best = pvals.iter().copied().fold(1.0, f64::min);
    println!("{} sites tested, smallest p = {best}", pvals.len());
    let mut m = Manifest::new("tdt", cli.seed, rayon::current_num_threads());
    m.inputs = inputs;
    m.outputs = outputs;
    finish(m, &a.out)
}

fn combine(cli: &Cli, a: &CombineArgs) -> Result<()> {
    let mut table = read_result_table(&a.input)?;
    let order = order_by_weight(&table.weights());
    let set = discoveries(a.method, &table.p_values(), &order, a.alpha, a.c)?;
    table.apply(&set);
    write_result_table(&a.out, &table)?;
    println!(
        "{} of {} rejected by {}",
        set.len(),
        table.rows.len(),
        a.method.name()
    );
    let mut m = Manifest::new("combine", cli.seed, rayon::current_num_threads())
        .param("method", a.method.name())
        .param("alpha", a.alpha)
        .param("c", a.c)
        .param("guarantee", a.method.guarantee());
    m.inputs = vec![a.input.display().to_string()];
    m.outputs = vec![a.out.display().to_string()];
    finish(m, &a.out)
}

fn demo_admixed(cli: &Cli, a: &DemoAdmixedArgs) -> Result<()> {
    let mut spec = AdmixedDemoSpec::default();
    spec.study.n_trios = a.n;
    spec.study.n_external = a.external;
    spec.study.layout = vec![(1, a.p, 1.0, 63_000_000)];
    spec.study.h2 = a.h2;
    spec.replicates = a.replicates;
    let out = run_admixed_demo(&spec, cli.seed)?;
    let set = &out.discoveries;
    let map = GeneticMap::uniform(&spec.study.layout)?;
    let table = ResultTable::from_pvalues(&out.local, &map, Some(set));
    write_result_table(&a.out, &table)?;
    let manhattan = with_suffix(&a.out, ".tdt.csv");
    let points: Vec<_> = map
        .sites()
        .iter()
        .zip(&out.tdt_pvalues)
        .map(|(s, &p)| (s.chromosome, s.physical_pos, p))
        .collect();
    write_manhattan_csv(&manhattan, &points)?;
    let causal = map.site(out.causal);
    println!("causal site {} at {} bp", causal.id, causal.physical_pos);
    println!(
        "per-SNP TDT: {} rejections at p <= {}, {} more than {} bins from the causal site",
        out.tdt_rejections.len(),
        spec.tdt_threshold,
        out.far_rejections.len(),
        spec.far_bins
    );
    println!(
        "independent local tests with seqstep: {} groups rejected, false discovery proportion {}",
        set.len(),
        out.false_discovery_proportion
    );
    let mut m = Manifest::new("demo-admixed", cli.seed, rayon::current_num_threads())
        .param("n", a.n)
        .param("external", a.external)
        .param("p", a.p)
        .param("h2", a.h2)
        .param("replicates", a.replicates)
        .param("causal_site", &causal.id)
        .param("tdt_rejections", out.tdt_rejections.len())
        .param("far_rejections", out.far_rejections.len())
        .param("false_discovery_proportion", out.false_discovery_proportion);
    m.outputs = vec![a.out.display().to_string(), manhattan.display().to_string()];
    finish(m, &a.out)
}

fn demo_confounded(cli: &Cli, a: &DemoConfoundedArgs) -> Result<()> {
    let out = run_confounded_demo(a.replicates, cli.seed)?;
    let y = out.dataset.phenotype.values();
    println!("Subject\tPopulation\tY\tX_j\tX_j*\tX~_j");
    for (i, rec) in out.dataset.records.iter().enumerate() {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            rec.id, out.population[i], y[i], out.genotype[i], out.permuted[i], out.twin[i]
        );
    }
    println!(
        "permutation test p-value: {} (exhaustive)",
        out.permutation_exact
    );
    println!(
        "permutation test p-value: {} (Monte Carlo, K = {})",
        out.permutation_monte_carlo, a.replicates
    );
    println!("digital twin test p-value: {}", out.dtt.p_value);
    if let Some(path) = &a.out {
        let map = &out.dataset.map;
        let entry = PValueEntry {
            group_index: 0,
            group: Interval::new(0, map.len() - 1)?,
            p_value: out.dtt.p_value,
            weight: 0.0,
            replicates: a.replicates,
            t_star: out.dtt.t_star,
        };
        let table = ResultTable::from_pvalues(
            &PValueTable {
                entries: vec![entry],
            },
            map,
            None,
        );
        write_result_table(path, &table)?;
        let mut m = Manifest::new("demo-confounded", cli.seed, rayon::current_num_threads())
            .param("replicates", a.replicates)
            .param("permutation_exact", out.permutation_exact)
            .param("permutation_monte_carlo", out.permutation_monte_carlo)
            .param("dtt", out.dtt.p_value);
        m.outputs = vec![path.display().to_string()];
        finish(m, path)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Fit(a) => fit(cli, a),
        Command::Dtt(a) => dtt(cli, a),
        Command::Ldtt(a) => local(cli, a, false),
        Command::LdttIndep(a) => local(cli, a, true),
        Command::Tdt(a) => tdt(cli, a),
        Command::Combine(a) => combine(cli, a),
        Command::DemoAdmixed(a) => demo_admixed(cli, a),
        Command::DemoConfounded(a) => demo_confounded(cli, a),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numeric(_) | Error::Contract(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        eprintln!("dtt: cannot start {} threads: {e}", cli.threads);
        return ExitCode::from(3);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dtt: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
