use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

pub const RMSPROP_DECAY: f64 = 0.95;
pub const RMSPROP_EPS: f64 = 1e-6;

/// Gradients keyed like the parameters they belong to.
pub type Gradients = BTreeMap<String, Vec<f64>>;

/// Named trainable tensors and their RMSProp mean-square cache.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterStore {
    params: BTreeMap<String, Tensor>,
    cache: BTreeMap<String, Tensor>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor) {
        self.cache.insert(name.to_string(), Tensor::zeros(tensor.shape()));
        self.params.insert(name.to_string(), tensor);
    }

    pub fn get(&self, name: &str) -> &Tensor {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params.get_mut(name)
    }

    pub fn try_get(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    pub fn params(&self) -> &BTreeMap<String, Tensor> {
        &self.params
    }

    pub fn cache(&self) -> &BTreeMap<String, Tensor> {
        &self.cache
    }

    pub fn cache_mut(&mut self) -> &mut BTreeMap<String, Tensor> {
        &mut self.cache
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn param_count(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }

    pub fn zero_grads(&self) -> Gradients {
        self.params
            .iter()
            .map(|(k, v)| (k.clone(), vec![0.0; v.len()]))
            .collect()
    }

    /// Copies parameter values (not the optimizer cache) from `other`.
    pub fn copy_values_from(&mut self, other: &ParameterStore) -> Result<()> {
        if !self.same_layout(other) {
            return Err(Error::KeyMismatch("parameter layouts differ".into()));
        }
        for (k, v) in &other.params {
            self.params.insert(k.clone(), v.clone());
        }
        Ok(())
    }

    pub fn same_layout(&self, other: &ParameterStore) -> bool {
        self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|((ka, va), (kb, vb))| ka == kb && va.shape() == vb.shape())
    }

    pub fn max_abs_diff(&self, other: &ParameterStore) -> f64 {
        self.params
            .iter()
            .zip(&other.params)
            .map(|((_, a), (_, b))| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn round_to_f32(&mut self) {
        self.params.values_mut().for_each(Tensor::round_to_f32);
        self.cache.values_mut().for_each(Tensor::round_to_f32);
    }

    /// Replaces the optimizer cache wholesale; keys and shapes must match.
    pub fn set_cache(&mut self, cache: BTreeMap<String, Tensor>) -> Result<()> {
        if cache.len() != self.params.len()
            || cache
                .iter()
                .any(|(k, v)| self.params.get(k).map(|p| p.shape() != v.shape()).unwrap_or(true))
        {
            return Err(Error::KeyMismatch("optimizer cache layout differs from parameters".into()));
        }
        self.cache = cache;
        Ok(())
    }
}

pub fn global_norm(grads: &Gradients) -> f64 {
    grads
        .values()
        .flat_map(|g| g.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) {
    let norm = global_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grads.values_mut().flat_map(|g| g.iter_mut()).for_each(|v| *v *= scale);
    }
}

/// `cache <- decay*cache + (1-decay)*g^2`, `param <- param - lr*g/sqrt(cache+eps)`.
pub fn rmsprop_step(store: &mut ParameterStore, grads: &Gradients, lr: f64, decay: f64, eps: f64) -> Result<()> {
    if grads.len() != store.params.len() || grads.keys().any(|k| !store.params.contains_key(k)) {
        let missing: Vec<&String> = store.params.keys().filter(|k| !grads.contains_key(*k)).collect();
        let extra: Vec<&String> = grads.keys().filter(|k| !store.params.contains_key(*k)).collect();
        return Err(Error::KeyMismatch(format!("missing {missing:?}, unexpected {extra:?}")));
    }
    for (name, g) in grads {
        let param = store.params.get_mut(name).expect("checked");
        let cache = store.cache.get_mut(name).expect("cache keys mirror params");
        if g.len() != param.len() {
            return Err(Error::Shape(format!(
                "gradient for {name} has {} values, parameter has {}",
                g.len(),
                param.len()
            )));
        }
        for ((p, c), &gi) in param.data_mut().iter_mut().zip(cache.data_mut()).zip(g) {
            *c = decay * *c + (1.0 - decay) * gi * gi;
            *p -= lr * gi / (*c + eps).sqrt();
        }
    }
    Ok(())
}
