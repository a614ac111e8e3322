//! The `pgmerge` command line. One subcommand per pipeline stage:
//! generate, partition, gt, build, plan, merge, merge-multi, search,
//! bench, compare.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::eval::{
    bench_csv, bench_search, bench_separated, brute_force_knn, compare_merge_orders,
    compare_merge_strategies, merge_report_csv, multi_merge_csv, order_csv, pivot_variant_study,
    samples_csv, strategy_csv, variant_csv, CompareParams, MergeStrategy, PivotVariant, Topology,
};
use crate::fsutil;
use crate::mos::{
    default_degree_bound, load_plan, mos_plan, multi_merge_with, save_plan, CostMatrix,
};
use crate::partition::{
    load_manifest, partition_kmeans, partition_random, write_partitions, Manifest,
};
use crate::pgraph::{load_index, save_index, BuildParams, Index, SearchScratch};
use crate::rnsm::{merge_pair, MergeParams, Strategy};
use crate::vecstore::{
    load_fvecs, load_ivecs, save_fvecs, save_ivecs, synth, GroundTruth, NodeId, VectorSet,
};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "pgmerge",
    version,
    about = "Build, merge, plan and benchmark proximity-graph indexes"
)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "PGMERGE_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset.
    Generate(GenerateArgs),
    /// Split a dataset into partitions.
    Partition(PartitionArgs),
    /// Exact k-nearest-neighbor ground truth.
    Gt(GtArgs),
    /// Build a graph index.
    Build(BuildArgs),
    /// Plan multi-index merge order.
    Plan(PlanArgs),
    /// Merge two indexes.
    Merge(MergeArgs),
    /// Merge many indexes along a plan.
    MergeMulti(MergeMultiArgs),
    /// Search an index and write result ids.
    Search(SearchArgs),
    /// Recall/QPS sweep.
    Bench(BenchArgs),
    /// Strategy, topology and pivot-variant comparisons.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dim: usize,
    /// Gaussian mixture components; 0 or 1 gives one isotropic Gaussian.
    #[arg(long, default_value_t = 0)]
    clusters: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also draw this many held-out query vectors from the same distribution.
    #[arg(long, requires = "queries_out", default_value_t = 0)]
    queries: usize,
    #[arg(long, requires = "queries")]
    queries_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PartKind {
    Random,
    Kmeans,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long, value_enum, default_value = "random")]
    kind: PartKind,
    #[arg(long, default_value_t = crate::partition::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct GtArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// Vectors to index.
    #[arg(
        long,
        required_unless_present = "manifest",
        conflicts_with = "manifest"
    )]
    input: Option<PathBuf>,
    /// Take partition `--part` from a partition manifest instead.
    #[arg(long, requires = "part")]
    manifest: Option<PathBuf>,
    #[arg(long, requires = "manifest")]
    part: Option<usize>,
    /// First global id for `--input` vectors.
    #[arg(long, default_value_t = 0, conflicts_with = "manifest")]
    id_offset: u64,
    #[arg(long, alias = "M", default_value_t = 16)]
    max_degree: usize,
    #[arg(long, default_value_t = 100)]
    ef_construction: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PlanKind {
    Centroid,
    Random,
}

#[derive(Args, Debug)]
struct PlanArgs {
    /// One centroid per partition.
    #[arg(long)]
    centroids: PathBuf,
    #[arg(long, value_enum, default_value = "centroid")]
    kind: PlanKind,
    /// Degree bound (default min(4, m - 1)).
    #[arg(long = "R")]
    r: Option<usize>,
    /// Diameter bound; `inf` disables it.
    #[arg(long, default_value = "2")]
    delta: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct MergeFlags {
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 20)]
    k_plus: usize,
    #[arg(long, default_value_t = 10)]
    k_cross: usize,
    #[arg(long, default_value_t = 100)]
    ef: usize,
    /// Beam width of follower searches (default min(ef, max(32, k-cross))).
    #[arg(long)]
    follower_ef: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum StrategyArg {
    Naive,
    Rnsm,
}

impl StrategyArg {
    fn strategy(self) -> Strategy {
        match self {
            StrategyArg::Naive => Strategy::Naive,
            StrategyArg::Rnsm => Strategy::Rnsm,
        }
    }
}

#[derive(Args, Debug)]
struct MergeArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "rnsm")]
    strategy: StrategyArg,
    #[command(flatten)]
    flags: MergeFlags,
    #[arg(long)]
    report: Option<PathBuf>,
    /// (pivot_dist, slide_ndc) samples CSV.
    #[arg(long)]
    samples: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MergeMultiArgs {
    /// Comma-separated index files, in partition order.
    #[arg(long, value_delimiter = ',', required = true)]
    indexes: Vec<PathBuf>,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "rnsm")]
    strategy: StrategyArg,
    #[command(flatten)]
    flags: MergeFlags,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 64)]
    ef: usize,
    /// Result ids (global) as ivecs.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Index to benchmark.
    #[arg(long, required_unless_present = "indexes", conflicts_with = "indexes")]
    index: Option<PathBuf>,
    /// Separate indexes searched one after another.
    #[arg(long, value_delimiter = ',')]
    indexes: Vec<PathBuf>,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Map ground-truth source rows to partition global ids.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    efs: Vec<usize>,
    #[arg(long, default_value = "index")]
    label: String,
    #[arg(long)]
    out: PathBuf,
    /// Write each ef's result ids to `<prefix>_ef<ef>.ivecs`.
    #[arg(long)]
    dump_ids: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(subcommand)]
    mode: CompareMode,
}

#[derive(Args, Debug, Clone)]
struct CompareCommon {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Ground truth over the source file the manifest was made from.
    #[arg(long)]
    gt: PathBuf,
    /// Neighbors scored by recall@k (`--k` is the merge neighborhood).
    #[arg(long, default_value_t = 10)]
    recall_k: usize,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    efs: Vec<usize>,
    #[arg(long, alias = "M", default_value_t = 16)]
    max_degree: usize,
    #[arg(long, default_value_t = 100)]
    ef_construction: usize,
    #[arg(long = "R")]
    r: Option<usize>,
    #[arg(long, default_value = "2")]
    delta: String,
    #[command(flatten)]
    flags: MergeFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum CompareMode {
    /// naive, rnsm, rnsm+mos-random, rnsm+mos-centroid, rebuild, separated.
    Strategies {
        #[command(flatten)]
        common: CompareCommon,
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<String>,
    },
    /// path, star, mst, mos, random-regular.
    Orders {
        #[command(flatten)]
        common: CompareCommon,
        #[arg(long, value_delimiter = ',')]
        topologies: Vec<String>,
    },
    /// Sliding ratio of pivot strategies over a k sweep.
    Variants {
        #[arg(long)]
        source: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "3,5,10,20")]
        ks: Vec<usize>,
        #[command(flatten)]
        flags: MergeFlags,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code: 0 on success, 1 on usage errors, 2 on format or I/O errors.
pub fn run<I: IntoIterator<Item = OsString>>(argv: I) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("pgmerge: {e}");
            e.exit_code()
        }
    }
}

struct Ctx {
    seed: u64,
    workers: usize,
}

impl Ctx {
    fn config(&self, extra: &[(&str, String)]) -> Vec<(String, String)> {
        let mut c = vec![
            ("seed".to_string(), self.seed.to_string()),
            ("workers".to_string(), self.workers.to_string()),
        ];
        c.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
        c
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let workers = match cli.workers {
        Some(0) => return Err(Error::usage("--workers must be at least 1")),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, usize::from),
    };
    // Fails harmlessly if a pool already exists (tests call run repeatedly).
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
    let ctx = Ctx {
        seed: cli.seed,
        workers,
    };
    match &cli.command {
        Command::Generate(a) => generate(&ctx, a),
        Command::Partition(a) => partition(&ctx, a),
        Command::Gt(a) => gt(a),
        Command::Build(a) => build(&ctx, a),
        Command::Plan(a) => plan(a),
        Command::Merge(a) => merge(&ctx, a),
        Command::MergeMulti(a) => merge_multi(&ctx, a),
        Command::Search(a) => search(a),
        Command::Bench(a) => bench(&ctx, a),
        Command::Compare(a) => compare(&ctx, a),
    }
}

fn parse_delta(s: &str) -> Result<Option<usize>> {
    match s {
        "inf" | "none" => Ok(None),
        _ => match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(Error::usage(format!(
                "--delta must be a positive integer or inf, got {s:?}"
            ))),
            Ok(d) => Ok(Some(d)),
        },
    }
}

fn merge_params(f: &MergeFlags, workers: usize) -> Result<MergeParams> {
    let p = MergeParams {
        k: f.k,
        k_plus: f.k_plus,
        k_cross: f.k_cross,
        ef_merge: f.ef,
        follower_ef: f.follower_ef,
        workers,
        ..MergeParams::default()
    };
    p.validate()?;
    Ok(p)
}

fn merge_config(p: &MergeParams) -> Vec<(&'static str, String)> {
    vec![
        ("k", p.k.to_string()),
        ("k_plus", p.k_plus.to_string()),
        ("k_cross", p.k_cross.to_string()),
        ("ef", p.ef_merge.to_string()),
        ("follower_ef", p.follower_ef().to_string()),
    ]
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn generate(ctx: &Ctx, a: &GenerateArgs) -> Result<()> {
    if a.n == 0 || a.dim == 0 {
        return Err(Error::usage("--n and --dim must be positive"));
    }
    let all = synth::generate(a.n + a.queries, a.dim, a.clusters, ctx.seed);
    let Some(q_out) = &a.queries_out else {
        return save_fvecs(&all, &a.out);
    };
    let rows = |r: std::ops::Range<usize>| r.map(|i| i as NodeId).collect::<Vec<_>>();
    save_fvecs(&all.select(&rows(a.n..a.n + a.queries)), q_out)?;
    save_fvecs(&all.select(&rows(0..a.n)), &a.out)
}

fn partition(ctx: &Ctx, a: &PartitionArgs) -> Result<()> {
    let set = load_fvecs(&a.input)?;
    let p = match a.kind {
        PartKind::Random => partition_random(&set, a.m, ctx.seed)?,
        PartKind::Kmeans => partition_kmeans(&set, a.m, ctx.seed, a.max_iters)?,
    };
    write_partitions(&p, &a.out_dir)?;
    Ok(())
}

fn gt(a: &GtArgs) -> Result<()> {
    let base = load_fvecs(&a.base)?;
    let queries = load_fvecs(&a.queries)?;
    let truth = brute_force_knn(&base, &queries, a.k)?;
    save_ivecs(&truth.to_ivecs_rows()?, &a.out)
}

fn build(ctx: &Ctx, a: &BuildArgs) -> Result<()> {
    let set = match (&a.input, &a.manifest, a.part) {
        (Some(input), _, _) => {
            let set = load_fvecs(input)?;
            let n = set.len() as u64;
            set.with_ids((a.id_offset..a.id_offset + n).collect())?
        }
        (None, Some(m), Some(part)) => {
            let manifest = load_manifest(m)?;
            manifest.load_part(manifest_dir(m), part)?
        }
        _ => {
            return Err(Error::usage(
                "build needs --input or --manifest with --part",
            ))
        }
    };
    let params = BuildParams {
        max_degree: a.max_degree,
        ef_construction: a.ef_construction,
        seed: ctx.seed,
    };
    let (index, _) = Index::build(&set, &params)?;
    save_index(&index, &a.out)
}

fn manifest_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn plan(a: &PlanArgs) -> Result<()> {
    let delta = parse_delta(&a.delta)?;
    let centroids = load_fvecs(&a.centroids)?;
    let m = centroids.len();
    if m == 0 {
        return Err(Error::usage("centroid file is empty"));
    }
    let costs = match a.kind {
        PlanKind::Random => CostMatrix::unit(m),
        PlanKind::Centroid => {
            let pts: Vec<Vec<f32>> = centroids.iter().map(<[f32]>::to_vec).collect();
            CostMatrix::from_points(&pts)?
        }
    };
    let r = a.r.unwrap_or_else(|| default_degree_bound(m));
    save_plan(&mos_plan(&costs, r, delta)?, &a.out)
}

fn merge(ctx: &Ctx, a: &MergeArgs) -> Result<()> {
    let source = load_index(&a.source)?;
    let target = load_index(&a.target)?;
    let params = merge_params(&a.flags, ctx.workers)?;
    let (merged, report) = merge_pair(&target, &source, a.strategy.strategy(), &params)?;
    let mut extra = merge_config(&params);
    extra.push(("strategy", a.strategy.strategy().label().to_string()));
    extra.push(("source", path_str(&a.source)));
    extra.push(("target", path_str(&a.target)));
    let config = ctx.config(&extra);
    if let Some(r) = &a.report {
        fsutil::write_atomic(r, &merge_report_csv(&config, &report)?)?;
    }
    if let Some(s) = &a.samples {
        fsutil::write_atomic(s, &samples_csv(&config, &report)?)?;
    }
    save_index(&merged, &a.out)
}

fn merge_multi(ctx: &Ctx, a: &MergeMultiArgs) -> Result<()> {
    let indexes = a
        .indexes
        .iter()
        .map(load_index)
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Index> = indexes.iter().collect();
    let plan = load_plan(&a.plan)?;
    let params = merge_params(&a.flags, ctx.workers)?;
    let (merged, report) = multi_merge_with(&refs, &plan, a.strategy.strategy(), &params)?;
    if let Some(r) = &a.report {
        let mut extra = merge_config(&params);
        extra.push(("strategy", a.strategy.strategy().label().to_string()));
        extra.push(("plan", path_str(&a.plan)));
        extra.push(("m", indexes.len().to_string()));
        fsutil::write_atomic(r, &multi_merge_csv(&ctx.config(&extra), &report)?)?;
    }
    save_index(&merged, &a.out)
}

fn to_ivecs_ids(ids: &[Vec<u64>]) -> Result<Vec<Vec<i32>>> {
    ids.iter()
        .map(|row| {
            row.iter()
                .map(|&id| {
                    i32::try_from(id)
                        .map_err(|_| Error::usage(format!("id {id} does not fit in ivecs")))
                })
                .collect()
        })
        .collect()
}

fn search(a: &SearchArgs) -> Result<()> {
    let index = load_index(&a.index)?;
    let queries = load_fvecs(&a.queries)?;
    if !queries.is_empty() && queries.dim() != index.dim() {
        return Err(Error::usage(format!(
            "dimension mismatch: index {} vs queries {}",
            index.dim(),
            queries.dim()
        )));
    }
    let mut scratch = SearchScratch::new();
    let mut out = Vec::with_capacity(queries.len());
    for q in queries.iter() {
        let (res, _) = index.search(q, a.ef, a.k, &mut scratch)?;
        out.push(
            res.iter()
                .map(|c| index.vectors.id(c.id))
                .collect::<Vec<u64>>(),
        );
    }
    save_ivecs(&to_ivecs_ids(&out)?, &a.out)
}

fn load_truth(path: &Path, manifest: Option<&Manifest>) -> Result<GroundTruth> {
    let truth = GroundTruth::from_ivecs_rows(&load_ivecs(path)?)?;
    match manifest {
        Some(m) => m.translate_truth(&truth),
        None => Ok(truth),
    }
}

fn bench(ctx: &Ctx, a: &BenchArgs) -> Result<()> {
    let queries = load_fvecs(&a.queries)?;
    let manifest = a.manifest.as_ref().map(load_manifest).transpose()?;
    let truth = load_truth(&a.gt, manifest.as_ref())?;
    let (run, what) = match &a.index {
        Some(path) => (
            bench_search(&load_index(path)?, &queries, &truth, &a.efs, a.k)?,
            path_str(path),
        ),
        None => {
            let indexes = a
                .indexes
                .iter()
                .map(load_index)
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Index> = indexes.iter().collect();
            let names: Vec<String> = a.indexes.iter().map(|p| path_str(p)).collect();
            (
                bench_separated(&refs, &queries, &truth, &a.efs, a.k)?,
                names.join(";"),
            )
        }
    };
    let run = run.with_label(&a.label, 0.0);
    if let Some(prefix) = &a.dump_ids {
        for (ef, ids) in a.efs.iter().zip(&run.ids) {
            let mut name = prefix.clone().into_os_string();
            name.push(format!("_ef{ef}.ivecs"));
            save_ivecs(&to_ivecs_ids(ids)?, PathBuf::from(name))?;
        }
    }
    let config = ctx.config(&[
        ("index", what),
        ("queries", path_str(&a.queries)),
        ("gt", path_str(&a.gt)),
        ("k", a.k.to_string()),
        ("threads", "1".to_string()),
    ]);
    fsutil::write_atomic(&a.out, &bench_csv(&config, &run.results)?)
}

struct Loaded {
    parts: Vec<VectorSet>,
    queries: VectorSet,
    truth: GroundTruth,
    params: CompareParams,
}

fn load_compare(ctx: &Ctx, c: &CompareCommon) -> Result<Loaded> {
    let manifest = load_manifest(&c.manifest)?;
    let dir = manifest_dir(&c.manifest);
    let parts = (0..manifest.m)
        .map(|i| manifest.load_part(dir, i))
        .collect::<Result<Vec<_>>>()?;
    let queries = load_fvecs(&c.queries)?;
    let truth = load_truth(&c.gt, Some(&manifest))?;
    let params = CompareParams {
        build: BuildParams {
            max_degree: c.max_degree,
            ef_construction: c.ef_construction,
            seed: ctx.seed,
        },
        merge: merge_params(&c.flags, ctx.workers)?,
        efs: c.efs.clone(),
        k: c.recall_k,
        degree_bound: c.r,
        delta: parse_delta(&c.delta)?,
        seed: ctx.seed,
    };
    Ok(Loaded {
        parts,
        queries,
        truth,
        params,
    })
}

fn common_config(ctx: &Ctx, c: &CompareCommon, p: &CompareParams) -> Vec<(String, String)> {
    let mut extra = merge_config(&p.merge);
    extra.extend([
        ("manifest", path_str(&c.manifest)),
        ("max_degree", c.max_degree.to_string()),
        ("ef_construction", c.ef_construction.to_string()),
        ("recall_k", c.recall_k.to_string()),
        ("delta", c.delta.clone()),
        ("R", c.r.map_or("default".to_string(), |r| r.to_string())),
    ]);
    ctx.config(&extra)
}

fn compare(ctx: &Ctx, a: &CompareArgs) -> Result<()> {
    match &a.mode {
        CompareMode::Strategies { common, strategies } => {
            let l = load_compare(ctx, common)?;
            let wanted = if strategies.is_empty() {
                MergeStrategy::ALL.to_vec()
            } else {
                strategies
                    .iter()
                    .map(|s| MergeStrategy::parse(s))
                    .collect::<Result<Vec<_>>>()?
            };
            let rows =
                compare_merge_strategies(&l.parts, &l.queries, &l.truth, &wanted, &l.params)?;
            let config = common_config(ctx, common, &l.params);
            fsutil::write_atomic(&common.out, &strategy_csv(&config, &rows)?)
        }
        CompareMode::Orders { common, topologies } => {
            let l = load_compare(ctx, common)?;
            let wanted = if topologies.is_empty() {
                Topology::ALL.to_vec()
            } else {
                topologies
                    .iter()
                    .map(|s| Topology::parse(s))
                    .collect::<Result<Vec<_>>>()?
            };
            let indexes = l
                .parts
                .iter()
                .map(|p| Index::build(p, &l.params.build).map(|(i, _)| i))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Index> = indexes.iter().collect();
            let rows = compare_merge_orders(&refs, &l.queries, &l.truth, &wanted, &l.params)?;
            let config = common_config(ctx, common, &l.params);
            fsutil::write_atomic(&common.out, &order_csv(&config, &rows)?)
        }
        CompareMode::Variants {
            source,
            ks,
            flags,
            out,
        } => {
            let index = load_index(source)?;
            let params = merge_params(flags, ctx.workers)?;
            let rows = pivot_variant_study(&index, &PivotVariant::ALL, ks, &params, ctx.seed)?;
            let mut extra = merge_config(&params);
            extra.push(("source", path_str(source)));
            fsutil::write_atomic(out, &variant_csv(&ctx.config(&extra), &rows)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        run(std::iter::once("pgmerge")
            .chain(args.iter().copied())
            .map(OsString::from))
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn help_and_usage_errors() {
        assert_eq!(code(&["--help"]), 0);
        assert_eq!(code(&["build"]), 1);
        assert_eq!(code(&["build", "--input", "x", "--out", "y", "--bogus"]), 1);
        assert_eq!(code(&[]), 1);
    }

    #[test]
    fn missing_file_is_environment_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o.idx");
        let missing = dir.path().join("missing.fvecs");
        assert_eq!(
            code(&[
                "build",
                "--input",
                missing.to_str().unwrap(),
                "--out",
                out.to_str().unwrap()
            ]),
            2
        );
        assert!(!out.exists());
    }

    #[test]
    fn delta_parsing() {
        assert_eq!(parse_delta("inf").unwrap(), None);
        assert_eq!(parse_delta("3").unwrap(), Some(3));
        assert!(parse_delta("0").is_err());
        assert!(parse_delta("x").is_err());
    }

    #[test]
    fn random_kind_plans_unit_costs() {
        let dir = tempfile::tempdir().unwrap();
        let c = dir.path().join("c.fvecs");
        save_fvecs(&synth::gaussian(6, 3, 1), &c).unwrap();
        let out = dir.path().join("plan.json");
        let rc = code(&[
            "plan",
            "--centroids",
            c.to_str().unwrap(),
            "--kind",
            "random",
            "--R",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(rc, 0);
        let p = load_plan(&out).unwrap();
        assert_eq!(p.m(), 6);
        assert!(p.is_connected());
        assert_eq!(p.degree_bound(), 3);
    }
}
