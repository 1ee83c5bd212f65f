//! Random instance generators, corpora and deterministic splits.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{parse_dimacs, parse_edge_list, Graph, IndexBase, NodeSet};

/// Erdős–Rényi `G(n, p)` with unit weights.
pub fn gen_gnp<R: Rng + ?Sized>(n: usize, p_edge: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p_edge) {
        return Err(Error::invalid(format!("edge probability {p_edge} outside [0, 1]")));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p_edge {
                edges.push((i, j));
            }
        }
    }
    Graph::from_unweighted(n, &edges)
}

/// `G(n, p_background)` with a clique added on `k` random nodes.
pub fn gen_planted_clique<R: Rng + ?Sized>(n: usize, k: usize, p_background: f64, rng: &mut R) -> Result<(Graph, NodeSet)> {
    if k > n {
        return Err(Error::invalid(format!("planted clique of size {k} in a graph of {n} nodes")));
    }
    if !(0.0..=1.0).contains(&p_background) {
        return Err(Error::invalid(format!("edge probability {p_background} outside [0, 1]")));
    }
    let mut planted = index::sample(rng, n, k).into_vec();
    planted.sort_unstable();
    let mut member = vec![false; n];
    for &v in &planted {
        member[v] = true;
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            // draw for every pair so the background does not depend on the plant
            let coin = rng.gen::<f64>() < p_background;
            if coin || (member[i] && member[j]) {
                edges.push((i, j));
            }
        }
    }
    let g = Graph::from_unweighted(n, &edges)?;
    let set = NodeSet::from_nodes(&g, planted)?;
    Ok((g, set))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub graphs: Vec<Graph>,
    pub names: Vec<String>,
    pub split: Vec<Split>,
}

impl Corpus {
    /// Every graph starts in the training split.
    pub fn new(graphs: Vec<Graph>, names: Vec<String>) -> Result<Self> {
        if graphs.len() != names.len() {
            return Err(Error::Dimension(format!("{} graphs but {} names", graphs.len(), names.len())));
        }
        let split = vec![Split::Train; graphs.len()];
        Ok(Corpus { graphs, names, split })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn indices(&self, part: Split) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.split[k] == part).collect()
    }

    pub fn graphs_in(&self, part: Split) -> Vec<Graph> {
        self.indices(part).into_iter().map(|k| self.graphs[k].clone()).collect()
    }
}

/// Shuffles the corpus and assigns the first `round(f_train n)` graphs to
/// training, the next `round(f_val n)` to validation and the rest to test.
pub fn split_corpus<R: Rng + ?Sized>(mut corpus: Corpus, fractions: (f64, f64, f64), rng: &mut R) -> Result<Corpus> {
    if corpus.is_empty() {
        return Err(Error::invalid("cannot split an empty corpus"));
    }
    let (a, b, c) = fractions;
    if [a, b, c].iter().any(|f| !(0.0..=1.0).contains(f)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("split fractions ({a}, {b}, {c}) must be in [0, 1] and sum to 1")));
    }
    let n = corpus.len();
    let n_train = ((a * n as f64).round() as usize).min(n);
    let n_val = ((b * n as f64).round() as usize).min(n - n_train);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for (rank, &k) in order.iter().enumerate() {
        corpus.split[k] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    Ok(corpus)
}

/// Reads a graph, choosing DIMACS for `.dimacs`/`.col` files and the plain
/// edge list otherwise.
pub fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("dimacs") | Some("col") => parse_dimacs(&text),
        _ => parse_edge_list(&text, IndexBase::Zero),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub graphs: Vec<ManifestEntry>,
}

pub fn load_corpus(manifest_path: &Path) -> Result<Corpus> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut corpus = Corpus {
        graphs: Vec::with_capacity(manifest.graphs.len()),
        names: Vec::with_capacity(manifest.graphs.len()),
        split: Vec::with_capacity(manifest.graphs.len()),
    };
    for entry in manifest.graphs {
        corpus.graphs.push(read_graph(&base.join(&entry.path))?);
        corpus.names.push(entry.name);
        corpus.split.push(entry.split);
    }
    Ok(corpus)
}

/// Writes each graph as `<name>.txt` next to a `manifest.json`, returning the
/// manifest path.
pub fn save_corpus(dir: &Path, corpus: &Corpus) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut graphs = Vec::with_capacity(corpus.len());
    for k in 0..corpus.len() {
        let file = PathBuf::from(format!("{}.txt", corpus.names[k]));
        fs::write(dir.join(&file), corpus.graphs[k].to_edge_list())?;
        graphs.push(ManifestEntry {
            name: corpus.names[k].clone(),
            path: file,
            split: corpus.split[k],
        });
    }
    let manifest = Manifest { version: 1, graphs };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{brute_force_max_clique, is_clique};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gnp_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(gen_gnp(5, 1.0, &mut rng).unwrap().edge_count(), 10);
        assert_eq!(gen_gnp(5, 0.0, &mut rng).unwrap().edge_count(), 0);
        assert!(gen_gnp(5, 1.5, &mut rng).is_err());
    }

    #[test]
    fn gnp_edge_count_is_binomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = gen_gnp(1000, 0.01, &mut rng).unwrap();
        let trials = 1000.0 * 999.0 / 2.0;
        let mean = trials * 0.01;
        let sd = (trials * 0.01 * 0.99f64).sqrt();
        assert!((g.edge_count() as f64 - mean).abs() <= 3.0 * sd);
    }

    #[test]
    fn generation_is_reproducible() {
        let a = gen_planted_clique(30, 6, 0.2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = gen_planted_clique(30, 6, 0.2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a.0.to_edge_list(), b.0.to_edge_list());
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn planted_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (g, s) = gen_planted_clique(5, 5, 0.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert_eq!(s.len(), 5);
        let (g, s) = gen_planted_clique(50, 10, 0.3, &mut rng).unwrap();
        assert!(is_clique(&g, &s));
        assert!(gen_planted_clique(3, 4, 0.5, &mut rng).is_err());
    }

    #[test]
    fn planted_clique_is_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (g, s) = gen_planted_clique(50, 10, 0.3, &mut rng).unwrap();
            let best = brute_force_max_clique(&g, 50_000_000).unwrap();
            assert_eq!(best.len(), s.len());
        }
    }

    fn corpus(n: usize) -> Corpus {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let graphs = (0..n).map(|_| gen_gnp(8, 0.4, &mut rng).unwrap()).collect();
        let names = (0..n).map(|k| format!("g{k:02}")).collect();
        Corpus::new(graphs, names).unwrap()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let a = split_corpus(corpus(10), (0.6, 0.2, 0.2), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a.indices(Split::Train).len(), 6);
        assert_eq!(a.indices(Split::Val).len(), 2);
        assert_eq!(a.indices(Split::Test).len(), 2);
        let b = split_corpus(corpus(10), (0.6, 0.2, 0.2), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a.split, b.split);
        let c = split_corpus(corpus(10), (0.6, 0.2, 0.2), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_ne!(a.split, c.split);
        assert_eq!(c.indices(Split::Train).len(), 6);
    }

    #[test]
    fn split_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(split_corpus(corpus(0), (0.6, 0.2, 0.2), &mut rng).is_err());
        assert!(split_corpus(corpus(3), (0.6, 0.2, 0.3), &mut rng).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = std::env::temp_dir().join(format!("probmethod-corpus-{}", std::process::id()));
        let c = split_corpus(corpus(5), (0.6, 0.2, 0.2), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let path = save_corpus(&dir, &c).unwrap();
        let back = load_corpus(&path).unwrap();
        assert_eq!(back, c);
        fs::remove_dir_all(&dir).unwrap();
    }
}
