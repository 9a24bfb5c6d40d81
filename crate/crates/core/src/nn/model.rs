use ndarray::{concatenate, s, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Activation, HomophilicNorm, ModelConfig, NnError, SparseMatrix};
use crate::decouple::DecoupleResult;
use crate::graph::{Graph, Masks};

/// Everything the network reads from the data: propagation operators,
/// features, labels and masks. `heterophilic` is `None` for the plain GCN.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub propagation: SparseMatrix,
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub masks: Masks,
    pub heterophilic: Option<HeterophilicInputs>,
}

#[derive(Debug, Clone)]
pub struct HeterophilicInputs {
    /// Adjacency of the condensed graph, no self-loops.
    pub adjacency: SparseMatrix,
    pub features: Array2<f64>,
    /// Row of the condensed graph each node reads its embedding from.
    pub cluster_slot: Vec<Option<usize>>,
}

impl ModelInputs {
    pub fn duo(d: &DecoupleResult, norm: HomophilicNorm) -> Self {
        let mut inputs = Self::gcn(&d.g_ho, norm);
        inputs.heterophilic = Some(HeterophilicInputs {
            adjacency: SparseMatrix::adjacency(&d.g_he),
            features: d.g_he.features().clone(),
            cluster_slot: d.cluster_slot.clone(),
        });
        inputs
    }

    pub fn gcn(g: &Graph, norm: HomophilicNorm) -> Self {
        Self {
            propagation: SparseMatrix::propagation(g, norm),
            features: g.features().clone(),
            labels: g.labels().to_vec(),
            num_classes: g.num_classes(),
            masks: g.masks().clone(),
            heterophilic: None,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeterophilicParams {
    /// `l` layer weights; the first acts on raw features.
    pub w_he: Vec<Array2<f64>>,
    /// Self-connection weights of the `l - 1` aggregating layers.
    pub w_he_self: Vec<Array2<f64>>,
    /// Readout over the concatenated layer outputs, `l * hidden -> hidden`.
    pub w_he_out: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w_ho: Vec<Array2<f64>>,
    pub heterophilic: Option<HeterophilicParams>,
    /// Head, `(hidden or 2 * hidden) -> num_classes`.
    pub w_out: Array2<f64>,
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-a..=a))
}

impl ModelParams {
    /// Glorot-uniform weights, deterministic in `cfg.seed`.
    pub fn init(
        cfg: &ModelConfig,
        feature_dim: usize,
        num_classes: usize,
        heterophilic: bool,
    ) -> Self {
        let (l, h) = (cfg.num_layers, cfg.hidden_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let chain = |rng: &mut ChaCha8Rng| -> Vec<Array2<f64>> {
            (0..l)
                .map(|i| glorot(if i == 0 { feature_dim } else { h }, h, rng))
                .collect()
        };
        let w_ho = chain(&mut rng);
        let he = heterophilic.then(|| {
            let w_he = chain(&mut rng);
            let w_he_self = (1..l).map(|_| glorot(h, h, &mut rng)).collect();
            let w_he_out = glorot(l * h, h, &mut rng);
            HeterophilicParams {
                w_he,
                w_he_self,
                w_he_out,
            }
        });
        let head_in = if heterophilic { 2 * h } else { h };
        let w_out = glorot(head_in, num_classes, &mut rng);
        Self {
            w_ho,
            heterophilic: he,
            w_out,
        }
    }

    /// Matrices in canonical order with stable names.
    pub fn named(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out: Vec<(String, &Array2<f64>)> = Vec::new();
        for (i, w) in self.w_ho.iter().enumerate() {
            out.push((format!("w_ho.{i}"), w));
        }
        if let Some(he) = &self.heterophilic {
            for (i, w) in he.w_he.iter().enumerate() {
                out.push((format!("w_he.{i}"), w));
            }
            for (i, w) in he.w_he_self.iter().enumerate() {
                out.push((format!("w_he_self.{}", i + 1), w));
            }
            out.push(("w_he_out".into(), &he.w_he_out));
        }
        out.push(("w_out".into(), &self.w_out));
        out
    }

    /// Same order as [`ModelParams::named`].
    pub fn matrices_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out: Vec<&mut Array2<f64>> = self.w_ho.iter_mut().collect();
        if let Some(he) = &mut self.heterophilic {
            out.extend(he.w_he.iter_mut());
            out.extend(he.w_he_self.iter_mut());
            out.push(&mut he.w_he_out);
        }
        out.push(&mut self.w_out);
        out
    }

    /// Rebuilds parameters from `(name, matrix)` pairs in canonical order.
    pub fn from_named(items: Vec<(String, Array2<f64>)>) -> Result<Self, NnError> {
        let mut w_ho = Vec::new();
        let mut w_he = Vec::new();
        let mut w_he_self = Vec::new();
        let mut w_he_out = None;
        let mut w_out = None;
        for (name, m) in items {
            let (base, idx) =
                match name.split_once('.') {
                    Some((b, i)) => (
                        b.to_string(),
                        Some(i.parse::<usize>().map_err(|_| {
                            NnError::Checkpoint(format!("bad matrix name {name:?}"))
                        })?),
                    ),
                    None => (name.clone(), None),
                };
            let (list, expected) = match (base.as_str(), idx) {
                ("w_ho", Some(i)) => (&mut w_ho, i),
                ("w_he", Some(i)) => (&mut w_he, i),
                ("w_he_self", Some(i)) => (&mut w_he_self, i.wrapping_sub(1)),
                ("w_he_out", None) => {
                    w_he_out = Some(m);
                    continue;
                }
                ("w_out", None) => {
                    w_out = Some(m);
                    continue;
                }
                _ => return Err(NnError::Checkpoint(format!("unknown matrix {name:?}"))),
            };
            if list.len() != expected {
                return Err(NnError::Checkpoint(format!("{name} out of order")));
            }
            list.push(m);
        }
        let w_out = w_out.ok_or_else(|| NnError::Checkpoint("missing w_out".into()))?;
        let heterophilic = match w_he_out {
            Some(w_he_out) => Some(HeterophilicParams {
                w_he,
                w_he_self,
                w_he_out,
            }),
            None if w_he.is_empty() && w_he_self.is_empty() => None,
            None => return Err(NnError::Checkpoint("missing w_he_out".into())),
        };
        Ok(Self {
            w_ho,
            heterophilic,
            w_out,
        })
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for m in z.matrices_mut() {
            m.fill(0.0);
        }
        z
    }

    pub fn num_weights(&self) -> usize {
        self.named().iter().map(|(_, m)| m.len()).sum()
    }

    /// Checks the shape chain against the inputs.
    pub fn check(&self, cfg: &ModelConfig, inputs: &ModelInputs) -> Result<(), NnError> {
        let (l, h, d) = (cfg.num_layers, cfg.hidden_dim, inputs.feature_dim());
        let mut expected: Vec<(String, (usize, usize))> = (0..l)
            .map(|i| (format!("w_ho.{i}"), (if i == 0 { d } else { h }, h)))
            .collect();
        match (&self.heterophilic, &inputs.heterophilic) {
            (Some(_), Some(he)) => {
                if he.features.ncols() != d {
                    return Err(NnError::Shape(format!(
                        "heterophilic features have width {}, expected {d}",
                        he.features.ncols()
                    )));
                }
                if he.adjacency.dim() != he.features.nrows() {
                    return Err(NnError::Shape(
                        "heterophilic adjacency and features disagree".into(),
                    ));
                }
                if he.cluster_slot.len() != inputs.num_nodes() {
                    return Err(NnError::Shape("cluster_slot length".into()));
                }
                expected
                    .extend((0..l).map(|i| (format!("w_he.{i}"), (if i == 0 { d } else { h }, h))));
                expected.extend((1..l).map(|i| (format!("w_he_self.{i}"), (h, h))));
                expected.push(("w_he_out".into(), (l * h, h)));
                expected.push(("w_out".into(), (2 * h, inputs.num_classes)));
            }
            (None, None) => expected.push(("w_out".into(), (h, inputs.num_classes))),
            _ => {
                return Err(NnError::Shape(
                    "parameters and inputs disagree on the heterophilic branch".into(),
                ))
            }
        }
        let got: Vec<(String, (usize, usize))> = self
            .named()
            .into_iter()
            .map(|(n, m)| (n, m.dim()))
            .collect();
        if got != expected {
            return Err(NnError::Shape(format!(
                "expected {expected:?}, got {got:?}"
            )));
        }
        if inputs.propagation.dim() != inputs.num_nodes() {
            return Err(NnError::Shape("propagation operator size".into()));
        }
        Ok(())
    }
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => z.mapv(|x| if x <= 0.0 { 0.0 } else { x }),
            Activation::Identity => z.clone(),
        }
    }

    fn backward(self, z: &Array2<f64>, mut grad: Array2<f64>) -> Array2<f64> {
        if self == Activation::Relu {
            grad.zip_mut_with(z, |g, &x| {
                if x <= 0.0 {
                    *g = 0.0
                }
            });
        }
        grad
    }
}

/// Inverted dropout; the stored mask holds 0 or `1 / (1 - rate)`.
fn dropout(
    x: &Array2<f64>,
    rate: f64,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> (Array2<f64>, Option<Array2<f64>>) {
    match rng {
        Some(rng) if rate > 0.0 => {
            let keep = 1.0 / (1.0 - rate);
            let mask = Array2::from_shape_simple_fn(x.dim(), || {
                if rng.random::<f64>() < rate {
                    0.0
                } else {
                    keep
                }
            });
            (x * &mask, Some(mask))
        }
        _ => (x.clone(), None),
    }
}

fn apply_mask(grad: Array2<f64>, mask: &Option<Array2<f64>>) -> Array2<f64> {
    match mask {
        Some(m) => grad * m,
        None => grad,
    }
}

#[derive(Debug, Clone)]
struct HomophilicCache {
    /// Dropped layer inputs.
    inputs: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
    pre: Vec<Array2<f64>>,
    /// Output of every layer, `X^1 .. X^l`.
    outputs: Vec<Array2<f64>>,
}

#[derive(Debug, Clone)]
struct HeterophilicCache {
    /// Dropped layer inputs `drop(X^0) .. drop(X^(l-1))`.
    inputs: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
    pre: Vec<Array2<f64>>,
    readout_in: Array2<f64>,
    readout_pre: Array2<f64>,
    readout: Array2<f64>,
}

fn homophilic_pass(
    p: &SparseMatrix,
    x: &Array2<f64>,
    w: &[Array2<f64>],
    cfg: &ModelConfig,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> HomophilicCache {
    let mut cache = HomophilicCache {
        inputs: Vec::new(),
        masks: Vec::new(),
        pre: Vec::new(),
        outputs: Vec::new(),
    };
    for wi in w {
        let (dropped, mask) = dropout(cache.outputs.last().unwrap_or(x), cfg.dropout_rate, rng);
        let z = p.matmul(&dropped.dot(wi));
        cache.outputs.push(cfg.activation.apply(&z));
        cache.inputs.push(dropped);
        cache.masks.push(mask);
        cache.pre.push(z);
    }
    cache
}

fn heterophilic_pass(
    a: &SparseMatrix,
    x: &Array2<f64>,
    p: &HeterophilicParams,
    cfg: &ModelConfig,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> HeterophilicCache {
    let mut inputs = Vec::new();
    let mut masks = Vec::new();
    let mut pre = Vec::new();
    let mut outputs: Vec<Array2<f64>> = Vec::new();
    for (i, wi) in p.w_he.iter().enumerate() {
        let (dropped, mask) = dropout(outputs.last().unwrap_or(x), cfg.dropout_rate, rng);
        let z = if i == 0 {
            dropped.dot(wi)
        } else {
            a.matmul(&dropped.dot(wi)) + dropped.dot(&p.w_he_self[i - 1])
        };
        outputs.push(cfg.activation.apply(&z));
        inputs.push(dropped);
        masks.push(mask);
        pre.push(z);
    }
    let views: Vec<_> = outputs.iter().map(|o| o.view()).collect();
    let readout_in = concatenate(Axis(1), &views).expect("layer outputs share row count");
    let readout_pre = readout_in.dot(&p.w_he_out);
    let readout = cfg.activation.apply(&readout_pre);
    HeterophilicCache {
        inputs,
        masks,
        pre,
        readout_in,
        readout_pre,
        readout,
    }
}

/// Homophilic branch output, `num_nodes x hidden`. `rng` enables dropout.
pub fn homophilic_forward(
    inputs: &ModelInputs,
    params: &ModelParams,
    cfg: &ModelConfig,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<Array2<f64>, NnError> {
    params.check(cfg, inputs)?;
    let cache = homophilic_pass(
        &inputs.propagation,
        &inputs.features,
        &params.w_ho,
        cfg,
        &mut rng,
    );
    Ok(cache.outputs.last().expect("at least one layer").clone())
}

/// Heterophilic branch output after the readout, one row per
/// representative.
pub fn heterophilic_forward(
    inputs: &HeterophilicInputs,
    params: &HeterophilicParams,
    cfg: &ModelConfig,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<Array2<f64>, NnError> {
    let (l, h) = (cfg.num_layers, cfg.hidden_dim);
    if params.w_he.len() != l || params.w_he_self.len() + 1 != l {
        return Err(NnError::Shape("heterophilic layer count".into()));
    }
    if params.w_he_out.dim() != (l * h, h) || inputs.adjacency.dim() != inputs.features.nrows() {
        return Err(NnError::Shape("heterophilic readout or adjacency".into()));
    }
    Ok(heterophilic_pass(&inputs.adjacency, &inputs.features, params, cfg, &mut rng).readout)
}

/// Copies each representative's row to every node of its component. Nodes
/// without a slot get zeros.
pub fn scatter_heterophilic(
    reps: &Array2<f64>,
    cluster_slot: &[Option<usize>],
) -> Result<Array2<f64>, NnError> {
    let mut out = Array2::zeros((cluster_slot.len(), reps.ncols()));
    for (v, slot) in cluster_slot.iter().enumerate() {
        if let Some(s) = *slot {
            if s >= reps.nrows() {
                return Err(NnError::Shape(format!(
                    "node {v} points at slot {s} of {}",
                    reps.nrows()
                )));
            }
            out.row_mut(v).assign(&reps.row(s));
        }
    }
    Ok(out)
}

fn gather_heterophilic(
    grad: &Array2<f64>,
    cluster_slot: &[Option<usize>],
    reps: usize,
) -> Array2<f64> {
    let mut out = Array2::zeros((reps, grad.ncols()));
    for (v, slot) in cluster_slot.iter().enumerate() {
        if let Some(s) = *slot {
            let mut row = out.row_mut(s);
            row += &grad.row(v);
        }
    }
    out
}

/// `[h_ho | h_he] * w_out`, identity on the logits.
pub fn fuse_predict(
    h_ho: &Array2<f64>,
    h_he: &Array2<f64>,
    w_out: &Array2<f64>,
) -> Result<Array2<f64>, NnError> {
    if h_ho.nrows() != h_he.nrows() || h_ho.ncols() + h_he.ncols() != w_out.nrows() {
        return Err(NnError::Shape(format!(
            "cannot fuse {:?} and {:?} through {:?}",
            h_ho.dim(),
            h_he.dim(),
            w_out.dim()
        )));
    }
    let joined = concatenate(Axis(1), &[h_ho.view(), h_he.view()]).expect("rows checked");
    Ok(joined.dot(w_out))
}

/// Full forward pass with everything the backward pass needs.
#[derive(Debug, Clone)]
pub(crate) struct Forward {
    pub logits: Array2<f64>,
    ho: HomophilicCache,
    he: Option<HeterophilicCache>,
    head_in: Array2<f64>,
}

impl Forward {
    /// Outputs of each homophilic layer.
    pub fn homophilic_layers(&self) -> &[Array2<f64>] {
        &self.ho.outputs
    }

    /// Sign pattern of every pre-activation, used to detect kinks.
    pub fn activation_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        let mut push = |z: &Array2<f64>| out.extend(z.iter().map(|&x| x > 0.0));
        self.ho.pre.iter().for_each(&mut push);
        if let Some(he) = &self.he {
            he.pre.iter().for_each(&mut push);
            push(&he.readout_pre);
        }
        out
    }
}

pub(crate) fn forward(
    inputs: &ModelInputs,
    params: &ModelParams,
    cfg: &ModelConfig,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<Forward, NnError> {
    params.check(cfg, inputs)?;
    let ho = homophilic_pass(
        &inputs.propagation,
        &inputs.features,
        &params.w_ho,
        cfg,
        &mut rng,
    );
    let h_ho = ho.outputs.last().expect("at least one layer");
    let (he, head_in) = match (&params.heterophilic, &inputs.heterophilic) {
        (Some(p), Some(hi)) => {
            let cache = heterophilic_pass(&hi.adjacency, &hi.features, p, cfg, &mut rng);
            let scattered = scatter_heterophilic(&cache.readout, &hi.cluster_slot)?;
            let head_in =
                concatenate(Axis(1), &[h_ho.view(), scattered.view()]).expect("rows match");
            (Some(cache), head_in)
        }
        _ => (None, h_ho.clone()),
    };
    let logits = head_in.dot(&params.w_out);
    Ok(Forward {
        logits,
        ho,
        he,
        head_in,
    })
}

/// Mean softmax cross-entropy over `nodes` and its gradient with respect to
/// the logits (zero outside `nodes`).
pub fn softmax_cross_entropy(
    logits: &Array2<f64>,
    labels: &[usize],
    nodes: &[usize],
) -> (f64, Array2<f64>) {
    let mut grad = Array2::zeros(logits.dim());
    if nodes.is_empty() {
        return (0.0, grad);
    }
    let scale = 1.0 / nodes.len() as f64;
    let mut loss = 0.0;
    for &v in nodes {
        let row = logits.row(v);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&z| (z - max).exp()).sum();
        let log_norm = max + sum.ln();
        loss += log_norm - row[labels[v]];
        for (c, &z) in row.iter().enumerate() {
            let p = (z - log_norm).exp();
            grad[[v, c]] = scale * (p - if c == labels[v] { 1.0 } else { 0.0 });
        }
    }
    (loss * scale, grad)
}

pub(crate) fn backward(
    inputs: &ModelInputs,
    params: &ModelParams,
    cfg: &ModelConfig,
    fwd: &Forward,
    grad_logits: &Array2<f64>,
) -> ModelParams {
    let act = cfg.activation;
    let h = cfg.hidden_dim;
    let mut grads = params.zeros_like();
    grads.w_out = fwd.head_in.t().dot(grad_logits);
    let grad_head = grad_logits.dot(&params.w_out.t());

    if let (Some(p), Some(hi), Some(cache), Some(g)) = (
        &params.heterophilic,
        &inputs.heterophilic,
        &fwd.he,
        &mut grads.heterophilic,
    ) {
        let grad_scattered = grad_head.slice(s![.., h..]).to_owned();
        let grad_readout =
            gather_heterophilic(&grad_scattered, &hi.cluster_slot, cache.readout.nrows());
        let grad_pre = act.backward(&cache.readout_pre, grad_readout);
        g.w_he_out = cache.readout_in.t().dot(&grad_pre);
        let grad_concat = grad_pre.dot(&p.w_he_out.t());
        let l = p.w_he.len();
        // Gradient flowing into each layer output from the readout.
        let mut grad_out: Vec<Array2<f64>> = (0..l)
            .map(|i| grad_concat.slice(s![.., i * h..(i + 1) * h]).to_owned())
            .collect();
        for i in (0..l).rev() {
            let gz = act.backward(&cache.pre[i], std::mem::take(&mut grad_out[i]));
            let d = &cache.inputs[i];
            if i == 0 {
                g.w_he[0] = d.t().dot(&gz);
                break;
            }
            // A is symmetric, so A^T gz = A gz.
            let ga = hi.adjacency.matmul(&gz);
            g.w_he[i] = d.t().dot(&ga);
            g.w_he_self[i - 1] = d.t().dot(&gz);
            let gd = ga.dot(&p.w_he[i].t()) + gz.dot(&p.w_he_self[i - 1].t());
            grad_out[i - 1] += &apply_mask(gd, &cache.masks[i]);
        }
    }

    let mut grad = grad_head.slice(s![.., ..h]).to_owned();
    for i in (0..params.w_ho.len()).rev() {
        let gz = act.backward(&fwd.ho.pre[i], grad);
        // The propagation operator is symmetric in both norms.
        let gt = inputs.propagation.matmul(&gz);
        grads.w_ho[i] = fwd.ho.inputs[i].t().dot(&gt);
        if i == 0 {
            break;
        }
        grad = apply_mask(gt.dot(&params.w_ho[i].t()), &fwd.ho.masks[i]);
    }
    grads
}
