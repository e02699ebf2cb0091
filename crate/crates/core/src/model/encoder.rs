use super::{BoundParams, ModelError, ModelParams, ParamId, Source, Utterance};
use crate::autograd::{Graph, Tensor, Var};

/// Stacked features and labels of a batch of utterances.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchInputs {
    pub asv: Tensor,
    pub raw: Tensor,
    pub speakers: Vec<usize>,
    pub sources: Vec<Source>,
}

impl BatchInputs {
    pub fn from_utterances<'a, I>(utts: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = &'a Utterance>,
    {
        let mut asv = Vec::new();
        let mut raw = Vec::new();
        let mut speakers = Vec::new();
        let mut sources = Vec::new();
        for u in utts {
            asv.push(u.asv_features.data());
            raw.push(u.raw_features.data());
            speakers.push(u.speaker);
            sources.push(u.source);
        }
        if speakers.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let ragged = |rows: &[&[f64]]| rows.iter().any(|r| r.len() != rows[0].len());
        if ragged(&asv) || ragged(&raw) {
            return Err(ModelError::Dimension(
                "utterances have differing feature sizes".into(),
            ));
        }
        Ok(Self {
            asv: Tensor::from_rows(&asv),
            raw: Tensor::from_rows(&raw),
            speakers,
            sources,
        })
    }

    pub fn len(&self) -> usize {
        self.speakers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speakers.is_empty()
    }

    pub fn is_bonafide(&self) -> Vec<bool> {
        self.sources.iter().map(|s| s.is_bonafide()).collect()
    }
}

/// `F_c(F_asv(x_asv), F_raw(x_raw))` for every row of the batch, normalised
/// to unit length when the parameters ask for it.
pub fn encode_batch(
    g: &mut Graph,
    p: &BoundParams,
    params: &ModelParams,
    asv: &Tensor,
    raw: &Tensor,
) -> Result<Var, ModelError> {
    if asv.cols() != params.asv_dim() || raw.cols() != params.raw_dim() {
        return Err(ModelError::Dimension(format!(
            "features are {}+{} wide, model expects {}+{}",
            asv.cols(),
            raw.cols(),
            params.asv_dim(),
            params.raw_dim()
        )));
    }
    if asv.rows() != raw.rows() {
        return Err(ModelError::Dimension(format!(
            "{} asv rows vs {} raw rows",
            asv.rows(),
            raw.rows()
        )));
    }
    let x_asv = g.constant(asv.clone());
    let x_raw = g.constant(raw.clone());

    let h_asv = g.matmul(x_asv, p.var(ParamId::FAsv));

    let h1 = g.matmul(x_raw, p.var(ParamId::RawW1));
    let h1 = g.add_row(h1, p.var(ParamId::RawB1));
    let h1 = g.relu(h1);
    let h_raw = g.matmul(h1, p.var(ParamId::RawW2));
    let h_raw = g.add_row(h_raw, p.var(ParamId::RawB2));

    let fused = g.concat(h_asv, h_raw);
    let e = g.matmul(fused, p.var(ParamId::FuseW));
    let e = g.add_row(e, p.var(ParamId::FuseB));
    if params.normalize {
        let n = g.row_norm(e);
        Ok(g.div_col(e, n))
    } else {
        Ok(e)
    }
}

/// Embedding of a single utterance.
pub fn encode(u: &Utterance, params: &ModelParams) -> Result<Vec<f64>, ModelError> {
    let mut g = Graph::new();
    let bound = params.bind(&mut g);
    let e = encode_batch(&mut g, &bound, params, &u.asv_features, &u.raw_features)?;
    Ok(g.value(e).data().to_vec())
}
