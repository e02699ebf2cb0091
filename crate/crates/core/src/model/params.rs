use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ModelError;
use crate::autograd::{Gradients, Graph, Tensor, Var};

/// Every trainable (or frozen) tensor of the network, in checkpoint order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamId {
    /// Frozen projection standing in for the pre-trained speaker encoder.
    FAsv,
    RawW1,
    RawB1,
    RawW2,
    RawB2,
    FuseW,
    FuseB,
    CmW,
    CmB,
    /// One unit-norm row per training speaker.
    AsvClasses,
    TtsW,
    TtsB,
    VcW,
    VcB,
}

impl ParamId {
    pub const ALL: [ParamId; 14] = [
        ParamId::FAsv,
        ParamId::RawW1,
        ParamId::RawB1,
        ParamId::RawW2,
        ParamId::RawB2,
        ParamId::FuseW,
        ParamId::FuseB,
        ParamId::CmW,
        ParamId::CmB,
        ParamId::AsvClasses,
        ParamId::TtsW,
        ParamId::TtsB,
        ParamId::VcW,
        ParamId::VcB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::FAsv => "f_asv",
            ParamId::RawW1 => "f_raw.w1",
            ParamId::RawB1 => "f_raw.b1",
            ParamId::RawW2 => "f_raw.w2",
            ParamId::RawB2 => "f_raw.b2",
            ParamId::FuseW => "f_c.w",
            ParamId::FuseB => "f_c.b",
            ParamId::CmW => "cm_head.w",
            ParamId::CmB => "cm_head.b",
            ParamId::AsvClasses => "asv_head.classes",
            ParamId::TtsW => "tts_head.w",
            ParamId::TtsB => "tts_head.b",
            ParamId::VcW => "vc_head.w",
            ParamId::VcB => "vc_head.b",
        }
    }

    pub fn from_name(name: &str) -> Option<ParamId> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_frozen(self) -> bool {
        self == ParamId::FAsv
    }

    /// Trainable weights of the shared encoder (the raw branch and fusion layer).
    pub fn is_encoder(self) -> bool {
        matches!(
            self,
            ParamId::RawW1
                | ParamId::RawB1
                | ParamId::RawW2
                | ParamId::RawB2
                | ParamId::FuseW
                | ParamId::FuseB
        )
    }
}

/// Layer sizes used to initialise a [`ModelParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub asv_dim: usize,
    pub raw_dim: usize,
    pub asv_out: usize,
    pub raw_hidden: usize,
    pub raw_out: usize,
    pub emb_dim: usize,
    pub n_speakers: usize,
    pub normalize: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            asv_dim: 32,
            raw_dim: 32,
            asv_out: 32,
            raw_hidden: 64,
            raw_out: 32,
            emb_dim: 64,
            n_speakers: 8,
            normalize: true,
        }
    }
}

pub const TTS_CLASSES: usize = 4;
pub const VC_CLASSES: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// L2-normalise embeddings at the encoder output.
    pub normalize: bool,
    tensors: Vec<Tensor>,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> Tensor {
    let data = (0..rows * cols)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * std
        })
        .collect();
    Tensor::matrix(rows, cols, data)
}

impl ModelParams {
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xavier = |fan_in: usize, fan_out: usize| (2.0 / (fan_in + fan_out) as f64).sqrt();
        let fused = cfg.asv_out + cfg.raw_out;
        let d = cfg.emb_dim;
        let tensors = vec![
            gaussian(
                &mut rng,
                cfg.asv_dim,
                cfg.asv_out,
                (1.0 / cfg.asv_dim as f64).sqrt(),
            ),
            gaussian(
                &mut rng,
                cfg.raw_dim,
                cfg.raw_hidden,
                xavier(cfg.raw_dim, cfg.raw_hidden),
            ),
            Tensor::zeros(1, cfg.raw_hidden),
            gaussian(
                &mut rng,
                cfg.raw_hidden,
                cfg.raw_out,
                xavier(cfg.raw_hidden, cfg.raw_out),
            ),
            Tensor::zeros(1, cfg.raw_out),
            gaussian(&mut rng, fused, d, xavier(fused, d)),
            Tensor::zeros(1, d),
            gaussian(&mut rng, d, 2, xavier(d, 2)),
            Tensor::zeros(1, 2),
            gaussian(&mut rng, cfg.n_speakers, d, 1.0),
            gaussian(&mut rng, d, TTS_CLASSES, xavier(d, TTS_CLASSES)),
            Tensor::zeros(1, TTS_CLASSES),
            gaussian(&mut rng, d, VC_CLASSES, xavier(d, VC_CLASSES)),
            Tensor::zeros(1, VC_CLASSES),
        ];
        let mut p = Self {
            normalize: cfg.normalize,
            tensors,
        };
        p.normalize_class_vectors();
        p
    }

    /// Builds parameters from tensors listed in [`ParamId::ALL`] order,
    /// checking that the layer shapes chain together.
    pub fn from_tensors(tensors: Vec<Tensor>, normalize: bool) -> Result<Self, ModelError> {
        if tensors.len() != ParamId::ALL.len() {
            return Err(ModelError::Dimension(format!(
                "expected {} parameter tensors, got {}",
                ParamId::ALL.len(),
                tensors.len()
            )));
        }
        let p = Self { normalize, tensors };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let dims = |id: ParamId| self.get(id).dims2();
        let (_, asv_out) = dims(ParamId::FAsv);
        let (_, hidden) = dims(ParamId::RawW1);
        let (_, raw_out) = dims(ParamId::RawW2);
        let (_, d) = dims(ParamId::FuseW);
        let expect = [
            (ParamId::RawB1, (1, hidden)),
            (ParamId::RawW2, (hidden, raw_out)),
            (ParamId::RawB2, (1, raw_out)),
            (ParamId::FuseW, (asv_out + raw_out, d)),
            (ParamId::FuseB, (1, d)),
            (ParamId::CmW, (d, 2)),
            (ParamId::CmB, (1, 2)),
            (ParamId::AsvClasses, (self.n_speakers(), d)),
            (ParamId::TtsW, (d, TTS_CLASSES)),
            (ParamId::TtsB, (1, TTS_CLASSES)),
            (ParamId::VcW, (d, VC_CLASSES)),
            (ParamId::VcB, (1, VC_CLASSES)),
        ];
        for (id, shape) in expect {
            if dims(id) != shape {
                return Err(ModelError::Dimension(format!(
                    "{} has shape {:?}, expected {:?}",
                    id.name(),
                    dims(id),
                    shape
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.index()]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.index()]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn asv_dim(&self) -> usize {
        self.get(ParamId::FAsv).rows()
    }

    pub fn raw_dim(&self) -> usize {
        self.get(ParamId::RawW1).rows()
    }

    pub fn emb_dim(&self) -> usize {
        self.get(ParamId::FuseW).cols()
    }

    pub fn n_speakers(&self) -> usize {
        self.get(ParamId::AsvClasses).rows()
    }

    /// Rescales every ASV class vector to unit length.
    pub fn normalize_class_vectors(&mut self) {
        let classes = self.get_mut(ParamId::AsvClasses);
        let cols = classes.cols();
        for row in classes.data_mut().chunks_mut(cols) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }

    /// Registers the parameters on `g`. The frozen branch becomes a constant.
    pub fn bind(&self, g: &mut Graph) -> BoundParams {
        let vars = ParamId::ALL
            .iter()
            .map(|&id| {
                let t = self.get(id).clone();
                if id.is_frozen() {
                    g.constant(t)
                } else {
                    g.leaf(t)
                }
            })
            .collect();
        BoundParams { vars }
    }
}

/// Graph handles for a bound [`ModelParams`].
#[derive(Clone, Debug)]
pub struct BoundParams {
    vars: Vec<Var>,
}

impl BoundParams {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.index()]
    }

    /// Routes `id` through another node, e.g. a probe leaf for gradient
    /// checking.
    pub fn substitute(&mut self, id: ParamId, var: Var) {
        self.vars[id.index()] = var;
    }

    /// Per-parameter gradients in [`ParamId::ALL`] order. Frozen parameters
    /// get an all-zero tensor.
    pub fn gradients(&self, g: &Graph, grads: &Gradients) -> Vec<Tensor> {
        ParamId::ALL
            .iter()
            .map(|&id| {
                let v = self.var(id);
                grads.get(v).cloned().unwrap_or_else(|| {
                    let (r, c) = g.value(v).dims2();
                    Tensor::zeros(r, c)
                })
            })
            .collect()
    }
}
