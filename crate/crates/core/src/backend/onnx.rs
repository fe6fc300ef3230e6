//! ONNX encoders and NLI classifiers executed with tract.
//!
//! Graph contract: inputs named `input_ids`, `attention_mask` and optionally
//! `token_type_ids` (int64, `[batch, seq]`). An encoder exposes every hidden
//! state, either stacked in one `[layers + 1, batch, seq, dim]` output or as
//! one `[batch, seq, dim]` output per state. A classifier has a single
//! `[batch, 3]` logits output.

use std::sync::Arc;

use ndarray::Array2;
use tokenizers::{Encoding, Token, Tokenizer, TruncationParams, TruncationStrategy};
use tract_onnx::prelude::*;

use super::{Backend, EmbeddingSequence, LongInputMode, ModelConfig, NliDistribution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    InputIds,
    AttentionMask,
    TokenTypeIds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Head {
    /// Hidden states stacked in one output.
    Stacked { states: usize },
    /// One output per hidden state.
    PerLayer { states: usize },
    Classifier,
}

pub struct OnnxBackend {
    cfg: ModelConfig,
    layer: usize,
    tokenizer: Tokenizer,
    pair_tokenizer: Tokenizer,
    plan: Arc<TypedRunnableModel>,
    inputs: Vec<Role>,
    head: Head,
    vocab_rows: Option<usize>,
}

impl std::fmt::Debug for OnnxBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OnnxBackend")
            .field("model_id", &self.cfg.model_id)
            .field("layer", &self.layer)
            .field("head", &self.head)
            .finish()
    }
}

fn tract_err(e: impl std::fmt::Display) -> Error {
    Error::model(format!("{e:#}"))
}

/// Row count of the embedding table gathered by `input_ids`, if it can be found.
fn vocab_rows(path: &std::path::Path, ids_input: &str) -> Option<usize> {
    let proto = tract_onnx::onnx().proto_model_for_path(path).ok()?;
    let graph = proto.graph.as_ref()?;
    let table = graph
        .node
        .iter()
        .find(|n| n.op_type == "Gather" && n.input.get(1).map(String::as_str) == Some(ids_input))?
        .input
        .first()?;
    let init = graph.initializer.iter().find(|i| &i.name == table)?;
    (init.dims.len() == 2).then(|| init.dims[0] as usize)
}

impl OnnxBackend {
    pub fn load(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut tokenizer = Tokenizer::from_file(&cfg.tokenizer_path).map_err(|e| {
            Error::Model(format!("cannot load tokenizer {}: {e}", cfg.tokenizer_path.display()))
        })?;
        tokenizer
            .with_truncation(None)
            .map_err(Error::model)?;
        tokenizer.with_padding(None);
        let mut pair_tokenizer = tokenizer.clone();
        pair_tokenizer
            .with_truncation(Some(TruncationParams {
                max_length: cfg.max_length,
                strategy: TruncationStrategy::LongestFirst,
                ..Default::default()
            }))
            .map_err(Error::model)?;

        if !cfg.encoder_path.is_file() {
            return Err(Error::Model(format!(
                "cannot load model file {}",
                cfg.encoder_path.display()
            )));
        }
        let model = tract_onnx::onnx()
            .model_for_path(&cfg.encoder_path)
            .map_err(|e| Error::Model(format!("cannot load model {}: {e:#}", cfg.encoder_path.display())))?;
        let mut inputs = Vec::new();
        let mut ids_name = None;
        for outlet in model.input_outlets().map_err(tract_err)? {
            let name = model.node(outlet.node).name.as_str();
            let role = match name {
                "input_ids" => {
                    ids_name = Some(name.to_string());
                    Role::InputIds
                }
                "attention_mask" => Role::AttentionMask,
                "token_type_ids" => Role::TokenTypeIds,
                other => return Err(Error::Model(format!("unexpected graph input {other:?}"))),
            };
            inputs.push(role);
        }
        let ids_name = ids_name.ok_or_else(|| Error::model("graph has no input_ids input"))?;
        let vocab_rows = vocab_rows(&cfg.encoder_path, &ids_name);
        if let Some(rows) = vocab_rows {
            let size = tokenizer.get_vocab_size(true);
            if size > rows {
                return Err(Error::Model(format!(
                    "tokenizer/encoder vocabulary mismatch: tokenizer has {size} entries, encoder embeds {rows}"
                )));
            }
        }
        let plan = model
            .into_optimized()
            .and_then(|m| m.into_runnable())
            .map_err(tract_err)?;

        let mut backend = OnnxBackend {
            layer: 0,
            tokenizer,
            pair_tokenizer,
            plan,
            inputs,
            head: Head::Classifier,
            vocab_rows,
            cfg,
        };
        backend.head = backend.probe_head()?;
        if let Head::Stacked { states } | Head::PerLayer { states } = backend.head {
            let layer = backend.cfg.resolved_layer(states - 1);
            if layer >= states {
                return Err(Error::Model(format!(
                    "layer {layer} out of range: encoder exposes {states} hidden states"
                )));
            }
            backend.layer = layer;
        }
        Ok(backend)
    }

    pub fn from_config_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        OnnxBackend::load(ModelConfig::from_file(path)?)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn is_classifier(&self) -> bool {
        self.head == Head::Classifier
    }

    fn probe_head(&self) -> Result<Head> {
        let probe = self
            .tokenizer
            .post_process(Encoding::default(), None, true)
            .map_err(Error::model)?;
        let ids: Vec<u32> = if probe.get_ids().is_empty() { vec![0] } else { probe.get_ids().to_vec() };
        let type_ids = vec![0; ids.len()];
        let outputs = self.run(&ids, &type_ids)?;
        let shapes: Vec<&[usize]> = outputs.iter().map(|o| o.shape()).collect();
        match shapes.as_slice() {
            [s] if s.len() == 4 => Ok(Head::Stacked { states: s[0] }),
            [s] if s.len() == 2 => Ok(Head::Classifier),
            many if !many.is_empty() && many.iter().all(|s| s.len() == 3) => {
                Ok(Head::PerLayer { states: many.len() })
            }
            other => Err(Error::Model(format!("unrecognized output shapes {other:?}"))),
        }
    }

    fn run(&self, ids: &[u32], type_ids: &[u32]) -> Result<TVec<TValue>> {
        if let Some(rows) = self.vocab_rows {
            if let Some(&bad) = ids.iter().find(|&&i| i as usize >= rows) {
                return Err(Error::Model(format!(
                    "tokenizer/encoder vocabulary mismatch: id {bad} >= {rows}"
                )));
            }
        }
        let n = ids.len();
        let as_tensor = |v: Vec<i64>| -> Result<TValue> {
            Ok(tract_ndarray::Array2::from_shape_vec((1, n), v)
                .map_err(tract_err)?
                .into_tensor()
                .into())
        };
        let inputs = self
            .inputs
            .iter()
            .map(|role| match role {
                Role::InputIds => as_tensor(ids.iter().map(|&i| i as i64).collect()),
                Role::AttentionMask => as_tensor(vec![1; n]),
                Role::TokenTypeIds => as_tensor(type_ids.iter().map(|&i| i as i64).collect()),
            })
            .collect::<Result<TVec<_>>>()?;
        self.plan.run(inputs).map_err(tract_err)
    }

    /// Hidden state `self.layer` for one encoded window, as `[seq, dim]`.
    fn hidden(&self, enc: &Encoding) -> Result<Array2<f64>> {
        let outputs = self.run(enc.get_ids(), enc.get_type_ids())?;
        let view = match self.head {
            Head::Stacked { .. } => {
                let all = outputs[0].to_plain_array_view::<f32>().map_err(tract_err)?;
                all.index_axis_move(tract_ndarray::Axis(0), self.layer)
                    .index_axis_move(tract_ndarray::Axis(0), 0)
                    .to_owned()
            }
            Head::PerLayer { .. } => {
                let one = outputs[self.layer].to_plain_array_view::<f32>().map_err(tract_err)?;
                one.index_axis_move(tract_ndarray::Axis(0), 0).to_owned()
            }
            Head::Classifier => {
                return Err(Error::Unsupported {
                    backend: self.cfg.model_id.clone(),
                    what: "token embeddings from a classifier graph".into(),
                })
            }
        };
        let (rows, cols) = (view.shape()[0], view.shape()[1]);
        Array2::from_shape_vec((rows, cols), view.iter().map(|&x| x as f64).collect())
            .map_err(tract_err)
    }

    /// Start offsets of the content windows covering `n` tokens.
    fn window_starts(&self, n: usize) -> Vec<usize> {
        let width = self.cfg.max_length - 2;
        match self.cfg.long_input_mode {
            LongInputMode::Truncate => vec![0],
            LongInputMode::Window => {
                let step = (self.cfg.max_length / 2).max(1);
                let mut starts = vec![0];
                while starts.last().unwrap() + width < n {
                    starts.push(starts.last().unwrap() + step);
                }
                starts
            }
        }
    }
}

impl Backend for OnnxBackend {
    fn model_id(&self) -> &str {
        &self.cfg.model_id
    }

    fn embed_tokens(&self, text: &str) -> Result<EmbeddingSequence> {
        if self.head == Head::Classifier {
            return Err(Error::Unsupported {
                backend: self.cfg.model_id.clone(),
                what: "token embeddings from a classifier graph".into(),
            });
        }
        let content = self.tokenizer.encode(text, false).map_err(Error::model)?;
        let n = content.get_ids().len();
        if n == 0 {
            return Err(Error::Empty("text after tokenization"));
        }
        let width = self.cfg.max_length - 2;
        let kept = match self.cfg.long_input_mode {
            LongInputMode::Truncate => n.min(width),
            LongInputMode::Window => n,
        };
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; kept];
        let mut dim = None;
        for start in self.window_starts(n) {
            let end = (start + width).min(kept);
            if start >= end {
                break;
            }
            let tokens: Vec<Token> = (start..end)
                .map(|i| {
                    Token::new(
                        content.get_ids()[i],
                        content.get_tokens()[i].clone(),
                        content.get_offsets()[i],
                    )
                })
                .collect();
            let enc = self
                .tokenizer
                .post_process(Encoding::from_tokens(tokens, 0), None, true)
                .map_err(Error::model)?;
            let hidden = self.hidden(&enc)?;
            dim = Some(hidden.ncols());
            let positions: Vec<usize> = enc
                .get_special_tokens_mask()
                .iter()
                .enumerate()
                .filter(|(_, &m)| m == 0)
                .map(|(i, _)| i)
                .collect();
            if positions.len() != end - start {
                return Err(Error::Model(format!(
                    "post-processing changed content length {} -> {}",
                    end - start,
                    positions.len()
                )));
            }
            for (k, pos) in positions.into_iter().enumerate() {
                let slot = &mut rows[start + k];
                if slot.is_none() {
                    *slot = Some(hidden.row(pos).to_vec());
                }
            }
        }
        let dim = dim.ok_or(Error::Empty("text after tokenization"))?;
        let flat: Vec<f64> = rows
            .into_iter()
            .flat_map(|r| r.expect("every kept token is covered by a window"))
            .collect();
        let vectors = Array2::from_shape_vec((kept, dim), flat).map_err(tract_err)?;
        let tokens = content.get_tokens()[..kept].to_vec();
        EmbeddingSequence::new(tokens, vectors, None, self.cfg.model_id.clone(), self.layer)
    }

    fn nli_probs(&self, premise: &str, hypothesis: &str) -> Result<NliDistribution> {
        if self.head != Head::Classifier {
            return Err(Error::Unsupported {
                backend: self.cfg.model_id.clone(),
                what: "NLI classification from an encoder graph".into(),
            });
        }
        let order = self.cfg.nli_label_order.ok_or_else(|| {
            Error::InvalidArgument(format!("model {} has no nli_label_order", self.cfg.model_id))
        })?;
        let enc = self
            .pair_tokenizer
            .encode((premise, hypothesis), true)
            .map_err(Error::model)?;
        let outputs = self.run(enc.get_ids(), enc.get_type_ids())?;
        let logits = outputs[0].to_plain_array_view::<f32>().map_err(tract_err)?;
        let row: Vec<f64> = logits.iter().map(|&x| x as f64).collect();
        NliDistribution::from_logits(&row, &order)
    }

    fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        let content = self.tokenizer.encode(text, false).map_err(Error::model)?;
        let mut tokens = content.get_tokens().to_vec();
        if self.cfg.long_input_mode == LongInputMode::Truncate {
            tokens.truncate(self.cfg.max_length - 2);
        }
        Ok(tokens)
    }
}
