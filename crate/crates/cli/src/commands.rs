use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use probmethod::certificates::{verify_solution_with, BoxCheck, CertifiedObjective};
use probmethod::datasets::{gen_gnp, gen_planted_clique, load_corpus, read_graph, save_corpus, split_corpus, Corpus, Split};
use probmethod::distribution::{CliqueLossParams, VolumeConstraint};
use probmethod::graph::{brute_force_max_clique, conductance, cut_weight, is_clique, set_weight};
use probmethod::model::{
    read_checkpoint, train_mpnn, write_checkpoint, AdamConfig, Checkpoint, CheckpointFormat, MpnnParams, TrainConfig,
    TrainLoss, TrainStart,
};
use probmethod::solver::{
    clique_score, solve_local_partition, solve_max_clique, CliqueConfig, DecodeVariant, PartitionConfig, Problem,
    Producer, SolveResult, DEFAULT_CLIQUE_BETA,
};
use probmethod::{Graph, NodeSet};

use crate::config::ConfigFile;
use crate::{
    BenchmarkArgs, DecodeArg, GenerateArgs, GraphKind, LossArg, ProblemArg, ProducerArg, RunArgs, SolveArgs, SplitArg,
    TrainArgs, VerifyArgs,
};

const EXIT_OK: u8 = 0;
const EXIT_FAILED_CHECK: u8 = 2;
const ORACLE_BUDGET: u64 = 2_000_000_000;

pub fn set_threads(threads: usize) -> Result<()> {
    ensure!(threads > 0, "--threads must be at least 1");
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

/// Resolved solver settings, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub problem: ProblemArg,
    pub producer: ProducerArg,
    pub decode: DecodeArg,
    pub beta: f64,
    pub gamma: Option<f64>,
    pub t: f64,
    pub restarts: usize,
    pub time_limit: Option<f64>,
    pub steps: usize,
    pub lr: f64,
    pub spread: f64,
    pub samples: usize,
    pub seed: u64,
    pub seed_node: usize,
    pub v_l: Option<f64>,
    pub v_h: Option<f64>,
    pub intervals: usize,
    pub hops: usize,
    pub half_width: f64,
    pub model: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(a: &RunArgs) -> Result<Self> {
        let f = ConfigFile::load(a.config.as_deref())?;
        let clique = CliqueConfig::default();
        let part = PartitionConfig::default();
        let cfg = RunConfig {
            problem: f.pick_choice(a.problem, "problem", ProblemArg::Clique)?,
            producer: f.pick_choice(a.producer, "producer", ProducerArg::Direct)?,
            decode: f.pick_choice(a.decode, "decode", DecodeArg::Conditional)?,
            beta: f.pick(a.beta, "beta", DEFAULT_CLIQUE_BETA)?,
            gamma: f.pick_opt(a.gamma, "gamma")?,
            t: f.pick(a.t, "t", clique.t)?,
            restarts: f.pick(a.restarts, "restarts", clique.restarts)?,
            time_limit: f.pick_opt(a.time_limit, "time_limit")?,
            steps: f.pick(a.steps, "steps", clique.steps)?,
            lr: f.pick(a.lr, "lr", clique.lr)?,
            spread: f.pick(a.spread, "spread", clique.spread)?,
            samples: f.pick(a.samples, "samples", clique.samples)?,
            seed: f.pick(a.seed, "seed", 0)?,
            seed_node: f.pick(a.seed_node, "seed_node", 0)?,
            v_l: f.pick_opt(a.v_l, "v_l")?,
            v_h: f.pick_opt(a.v_h, "v_h")?,
            intervals: f.pick(a.intervals, "intervals", part.interval_count)?,
            hops: f.pick(a.hops, "hops", part.hops)?,
            half_width: f.pick(a.half_width, "half_width", part.half_width)?,
            model: f.pick_opt(a.model.clone(), "model")?,
        };
        f.finish()?;
        if cfg.v_l.is_some() != cfg.v_h.is_some() {
            bail!("v_l and v_h must be given together");
        }
        Ok(cfg)
    }

    fn producer(&self) -> Producer {
        match self.producer {
            ProducerArg::Direct => Producer::Direct,
            ProducerArg::Mpnn => Producer::Mpnn,
            ProducerArg::Uniform => Producer::UniformRandom,
        }
    }

    fn decode(&self) -> DecodeVariant {
        match self.decode {
            DecodeArg::Conditional => DecodeVariant::Conditional,
            DecodeArg::Sweep => DecodeVariant::Sweep,
            DecodeArg::Sampled => DecodeVariant::Sampled,
        }
    }

    fn clique(&self) -> CliqueConfig {
        CliqueConfig {
            producer: self.producer(),
            decode: self.decode(),
            restarts: self.restarts,
            time_limit: self.time_limit,
            beta: Some(self.beta),
            gamma: self.gamma,
            t: self.t,
            steps: self.steps,
            lr: self.lr,
            spread: self.spread,
            samples: self.samples,
            seed: self.seed,
        }
    }

    fn partition(&self) -> Result<PartitionConfig> {
        let intervals = match (self.v_l, self.v_h) {
            (Some(l), Some(h)) => vec![VolumeConstraint::new(l, h)?],
            _ => Vec::new(),
        };
        Ok(PartitionConfig {
            producer: self.producer(),
            decode: self.decode(),
            intervals,
            interval_count: self.intervals,
            hops: self.hops,
            half_width: self.half_width,
            t: self.t,
            steps: self.steps,
            lr: self.lr,
            spread: self.spread,
            samples: self.samples,
            seed: self.seed,
        })
    }

    fn load_model(&self) -> Result<Option<MpnnParams>> {
        match (&self.model, self.producer) {
            (Some(path), _) => {
                let ck = read_checkpoint(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
                Ok(Some(ck.params))
            }
            (None, ProducerArg::Mpnn) => bail!("the mpnn producer needs --model"),
            (None, _) => Ok(None),
        }
    }

    fn run(&self, graph: &Graph, model: Option<&MpnnParams>) -> Result<SolveResult> {
        let model = if self.producer == ProducerArg::Mpnn { model } else { None };
        Ok(match self.problem {
            ProblemArg::Clique => solve_max_clique(graph, &self.clique(), model)?,
            ProblemArg::Partition => solve_local_partition(graph, self.seed_node, &self.partition()?, model)?,
        })
    }
}

fn load_graph(path: &Path) -> Result<Graph> {
    read_graph(path).with_context(|| format!("reading graph {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn parse_fractions(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad split {s:?}"))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => bail!("split needs three comma-separated fractions, got {s:?}"),
    }
}

pub fn generate(a: &GenerateArgs) -> Result<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let make = |rng: &mut ChaCha8Rng| -> Result<(Graph, Option<NodeSet>)> {
        Ok(match a.kind {
            GraphKind::Gnp => (gen_gnp(a.n, a.p, rng)?, None),
            GraphKind::Planted => {
                let (g, s) = gen_planted_clique(a.n, a.k, a.p, rng)?;
                (g, Some(s))
            }
        })
    };
    match a.count {
        None => {
            let (g, planted) = make(&mut rng)?;
            let mut text = g.to_edge_list();
            if let Some(s) = planted {
                let nodes: Vec<String> = s.nodes().iter().map(|v| v.to_string()).collect();
                text.push_str(&format!("# planted {}\n", nodes.join(" ")));
            }
            emit(a.out.as_deref(), &text)?;
        }
        Some(count) => {
            let dir = a.out_dir.as_deref().ok_or_else(|| anyhow!("--count needs --out-dir"))?;
            let mut graphs = Vec::with_capacity(count);
            for _ in 0..count {
                graphs.push(make(&mut rng)?.0);
            }
            let names = (0..count).map(|k| format!("g{k:04}")).collect();
            let corpus = split_corpus(Corpus::new(graphs, names)?, parse_fractions(&a.split)?, &mut rng)?;
            let manifest = save_corpus(dir, &corpus)?;
            println!("{}", manifest.display());
        }
    }
    Ok(EXIT_OK)
}

/// Whether the decoded set meets the claim of the certificate it carries.
fn certificate_holds(graph: &Graph, result: &SolveResult) -> Result<bool> {
    let set = NodeSet::from_nodes(graph, result.set.iter().copied())?;
    let objective = match (result.problem, result.interval) {
        (Problem::Clique, _) => CertifiedObjective::Clique {
            gamma: CliqueLossParams::for_graph(graph).gamma,
        },
        (Problem::Partition, Some(vc)) => CertifiedObjective::Cut { v_l: vc.v_l, v_h: vc.v_h },
        (Problem::Partition, None) => bail!("partition result without an interval"),
    };
    // the conditional decoder promises either the cost or the volume bound
    Ok(verify_solution_with(graph, &set, &result.certificate, &objective, BoxCheck::Either)?)
}

fn solve_report(cfg: &RunConfig, path: &Path, graph: &Graph, result: &SolveResult) -> Result<Value> {
    let mut body = serde_json::to_value(result)?;
    let wall = body
        .as_object_mut()
        .and_then(|o| o.remove("wall_time"))
        .unwrap_or(Value::Null);
    Ok(json!({
        "payload": {
            "command": "solve",
            "config": cfg,
            "graph": {
                "path": path,
                "nodes": graph.node_count(),
                "edges": graph.edge_count(),
                "fingerprint": graph.fingerprint(),
            },
            "result": body,
        },
        "timing": { "wall_time": wall },
    }))
}

pub fn solve(a: &SolveArgs) -> Result<u8> {
    let cfg = RunConfig::resolve(&a.run)?;
    let graph = load_graph(&a.graph)?;
    let model = cfg.load_model()?;
    let result = cfg.run(&graph, model.as_ref())?;
    let report = solve_report(&cfg, &a.graph, &graph, &result)?;
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    if a.strict {
        if !result.constraint_ok {
            eprintln!("constraint not satisfied");
            return Ok(EXIT_FAILED_CHECK);
        }
        if result.certificate.vacuous && !certificate_holds(&graph, &result)? {
            eprintln!("certificate is vacuous and the result does not meet it");
            return Ok(EXIT_FAILED_CHECK);
        }
    }
    Ok(EXIT_OK)
}

pub fn train(a: &TrainArgs) -> Result<u8> {
    let f = ConfigFile::load(a.config.as_deref())?;
    let defaults = TrainConfig::default();
    let loss = match f.pick_choice(a.loss, "loss", LossArg::Clique)? {
        LossArg::Clique => TrainLoss::Clique {
            beta: Some(f.pick(a.beta, "beta", DEFAULT_CLIQUE_BETA)?),
        },
        LossArg::Cut => TrainLoss::Cut,
    };
    let mut config = TrainConfig {
        epochs: f.pick(a.epochs, "epochs", defaults.epochs)?,
        batch_size: f.pick(a.batch_size, "batch_size", defaults.batch_size)?,
        layers: f.pick(a.layers, "layers", defaults.layers)?,
        hidden: f.pick(a.hidden, "hidden", defaults.hidden)?,
        adam: AdamConfig::with_lr(f.pick(a.lr, "lr", defaults.adam.lr)?),
        seed: f.pick(a.seed, "seed", defaults.seed)?,
    };
    f.finish()?;

    let corpus = load_corpus(&a.manifest).with_context(|| format!("loading corpus {}", a.manifest.display()))?;
    let train = corpus.graphs_in(Split::Train);
    ensure!(!train.is_empty(), "training split of {} is empty", a.manifest.display());
    let val = corpus.graphs_in(Split::Val);

    let (start, mut history) = match &a.resume {
        None => (TrainStart::Fresh, Vec::new()),
        Some(path) => {
            let ck = read_checkpoint(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
            config.layers = ck.layers;
            config.hidden = ck.hidden;
            (ck.resume(), ck.epoch_losses.clone())
        }
    };
    let offset = history.len();
    let outcome = train_mpnn(&train, &val, &loss, &config, start)?;
    let mut log = String::new();
    for (e, l) in outcome.epoch_losses.iter().enumerate() {
        ensure!(l.is_finite(), "epoch {} produced a non-finite loss", offset + e + 1);
        log.push_str(&format!("epoch {} train_loss {l:.6}", offset + e + 1));
        if let Some(v) = outcome.val_losses.get(e) {
            log.push_str(&format!(" val_loss {v:.6}"));
        }
        log.push('\n');
    }
    print!("{log}");
    history.extend_from_slice(&outcome.epoch_losses);
    let mut ck = Checkpoint::new(loss, config, &outcome);
    ck.epoch_losses = history;
    write_checkpoint(&a.out, &ck, CheckpointFormat::from_path(&a.out))
        .with_context(|| format!("writing checkpoint {}", a.out.display()))?;
    eprintln!("checkpoint written to {} (step {})", a.out.display(), ck.optimizer.step);
    Ok(EXIT_OK)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    (m, v.sqrt())
}

pub fn benchmark(a: &BenchmarkArgs) -> Result<u8> {
    let cfg = RunConfig::resolve(&a.run)?;
    let corpus = load_corpus(&a.manifest).with_context(|| format!("loading corpus {}", a.manifest.display()))?;
    let picked: Vec<usize> = match a.split {
        SplitArg::All => (0..corpus.len()).collect(),
        SplitArg::Train => corpus.indices(Split::Train),
        SplitArg::Val => corpus.indices(Split::Val),
        SplitArg::Test => corpus.indices(Split::Test),
    };
    ensure!(!picked.is_empty(), "no graphs selected from {}", a.manifest.display());
    let model = cfg.load_model()?;
    let producers: Vec<ProducerArg> = if a.compare {
        let mut p = vec![ProducerArg::Direct, ProducerArg::Uniform];
        if model.is_some() {
            p.push(ProducerArg::Mpnn);
        }
        p
    } else {
        vec![cfg.producer]
    };

    let clique = cfg.problem == ProblemArg::Clique;
    let mut optimum = vec![None; corpus.len()];
    if clique && !a.no_oracle {
        for &k in &picked {
            let g = &corpus.graphs[k];
            ensure!(
                g.node_count() <= a.oracle_limit,
                "{} has {} nodes, above the oracle limit {}; pass --no-oracle",
                corpus.names[k],
                g.node_count(),
                a.oracle_limit
            );
            let best = brute_force_max_clique(g, ORACLE_BUDGET)?;
            optimum[k] = Some(clique_score(g, &best));
        }
    }

    let mut csv = String::from("instance,producer,decode,value,time,constraint_ok\n");
    for &producer in &producers {
        let run = RunConfig {
            producer,
            ..cfg.clone()
        };
        let decode = serde_json::to_value(run.decode)?;
        let decode = decode.as_str().unwrap_or_default().to_string();
        let pname = serde_json::to_value(producer)?.as_str().unwrap_or_default().to_string();
        let mut values = Vec::new();
        let mut times = Vec::new();
        let mut ok = 0usize;
        for &k in &picked {
            let g = &corpus.graphs[k];
            let r = run.run(g, model.as_ref()).with_context(|| format!("solving {}", corpus.names[k]))?;
            let value = if clique {
                let set = NodeSet::from_nodes(g, r.set.iter().copied())?;
                optimum[k].map(|opt| clique_score(g, &set) / opt)
            } else {
                r.conductance
            };
            if let Some(v) = value {
                values.push(v);
            }
            times.push(r.wall_time);
            ok += r.constraint_ok as usize;
            let v = value.map(|v| format!("{v:.6}")).unwrap_or_default();
            csv.push_str(&format!(
                "{},{pname},{decode},{v},{:.6},{}\n",
                csv_field(&corpus.names[k]),
                r.wall_time,
                r.constraint_ok
            ));
        }
        let (m, s) = mean_std(&values);
        let (tm, _) = mean_std(&times);
        let frac = ok as f64 / picked.len() as f64;
        let fmt = |x: f64| if x.is_nan() { String::new() } else { format!("{x:.6}") };
        csv.push_str(&format!("summary_mean,{pname},{decode},{},{tm:.6},{frac:.6}\n", fmt(m)));
        csv.push_str(&format!("summary_std,{pname},{decode},{},,\n", fmt(s)));
    }
    emit(a.out.as_deref(), &csv)?;
    Ok(EXIT_OK)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

pub fn verify(a: &VerifyArgs) -> Result<u8> {
    let graph = load_graph(&a.graph)?;
    let text = fs::read_to_string(&a.result).with_context(|| format!("reading {}", a.result.display()))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.result.display()))?;
    let (body, fingerprint) = match doc.get("payload") {
        Some(p) => (
            p.get("result").cloned().ok_or_else(|| anyhow!("report has no result"))?,
            p.pointer("/graph/fingerprint").and_then(Value::as_str).map(str::to_string),
        ),
        None => (doc.clone(), None),
    };
    if let Some(fp) = fingerprint {
        ensure!(
            fp == graph.fingerprint(),
            "report was produced for a different graph (fingerprint {fp}, graph has {})",
            graph.fingerprint()
        );
    }
    let result: SolveResult = serde_json::from_value(body).context("malformed result")?;
    let set = NodeSet::from_nodes(&graph, result.set.iter().copied()).context("result does not fit the graph")?;

    let mut problems = Vec::new();
    match result.problem {
        Problem::Clique => {
            let w = set_weight(&graph, &set);
            if !close(w, result.objective) {
                problems.push(format!("objective {} but the set has weight {w}", result.objective));
            }
            if is_clique(&graph, &set) != result.constraint_ok {
                problems.push("constraint_ok does not match the clique check".to_string());
            }
        }
        Problem::Partition => {
            let c = cut_weight(&graph, &set);
            if !close(c, result.objective) {
                problems.push(format!("objective {} but the set has cut {c}", result.objective));
            }
            let phi = conductance(&graph, &set)?;
            if result.conductance.is_none_or(|x| !close(x, phi)) {
                problems.push(format!("conductance {:?} but the set has {phi}", result.conductance));
            }
            if let Some(seed) = result.seed_node {
                if !set.contains(seed) {
                    problems.push(format!("seed {seed} missing from the set"));
                }
            }
            match result.interval {
                Some(vc) => {
                    if set.volume() > vc.v_h + 1e-9 {
                        problems.push(format!("volume {} above v_h = {}", set.volume(), vc.v_h));
                    }
                    if vc.contains(set.volume()) != result.constraint_ok {
                        problems.push("constraint_ok does not match the volume interval".to_string());
                    }
                }
                None => problems.push("partition result without an interval".to_string()),
            }
        }
    }
    let cert = &result.certificate;
    if !cert.vacuous && !certificate_holds(&graph, &result)? {
        problems.push(format!("set does not meet the certified bound {}", cert.bound));
    }
    if problems.is_empty() {
        println!("ok");
        Ok(EXIT_OK)
    } else {
        for p in &problems {
            eprintln!("verify: {p}");
        }
        Ok(EXIT_FAILED_CHECK)
    }
}
