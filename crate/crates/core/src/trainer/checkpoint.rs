//! Little-endian binary checkpoint.
//!
//! ```text
//! "DRQN" | version u32 | config digest [32]
//! param count u32 | per param: name len u16, name, rank u8, dims u32.., f32 payload
//! cache count u32 | same layout
//! counter count u32 | u64 each (agent steps, episodes, updates)
//! rng blob: len u32, bytes
//! "RPLY" replay memory section
//! sha256 of everything above [32]
//! ```
//!
//! Network parameters are prefixed `q.` and `target.`; batch-norm running
//! statistics are stored alongside as `*.bnN.running_mean` / `running_var`.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::agent::{Init, QNetwork};
use crate::env::{write_atomic, ObservationFrame};
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::replay::{ReplayMemory, Transition};
use crate::trainer::config::TrainConfig;

pub const MAGIC: &[u8; 4] = b"DRQN";
pub const VERSION: u32 = 1;
const REPLAY_TAG: &[u8; 4] = b"RPLY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub agent_steps: u64,
    pub episodes: u64,
    pub updates: u64,
}

/// Everything needed to continue a run.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub net: QNetwork,
    pub target: QNetwork,
    pub counters: Counters,
    pub rng: ChaCha8Rng,
    pub memory: ReplayMemory,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }

    fn tensors<'a>(&mut self, items: impl ExactSizeIterator<Item = (String, &'a Tensor)>) {
        self.u32(items.len() as u32);
        for (name, t) in items {
            self.u16(name.len() as u16);
            self.bytes(name.as_bytes());
            self.u8(t.rank() as u8);
            for &d in t.shape() {
                self.u32(d as u32);
            }
            for &x in t.data() {
                self.0.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::CheckpointCorrupt(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn tensors(&mut self) -> Result<Vec<(String, Tensor)>> {
        let n = self.u32()? as usize;
        let mut out = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let len = self.u16()? as usize;
            let name = String::from_utf8(self.take(len)?.to_vec())
                .map_err(|_| Error::CheckpointCorrupt("tensor name is not UTF-8".into()))?;
            let rank = self.u8()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(self.u32()? as usize);
            }
            let count: usize = shape.iter().product();
            let raw = self.take(count.checked_mul(4).ok_or_else(|| Error::CheckpointCorrupt("tensor size".into()))?)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect();
            let t = Tensor::from_vec(&shape, data).map_err(|e| Error::CheckpointCorrupt(format!("{name}: {e}")))?;
            out.push((name, t));
        }
        Ok(out)
    }
}

fn net_tensors<'a>(prefix: &str, net: &'a QNetwork, buffers: &'a [(String, Tensor)]) -> Vec<(String, &'a Tensor)> {
    let mut v: Vec<(String, &Tensor)> = net
        .params()
        .params()
        .iter()
        .map(|(k, t)| (format!("{prefix}{k}"), t))
        .collect();
    v.extend(buffers.iter().map(|(k, t)| (format!("{prefix}{k}"), t)));
    v
}

fn rng_blob(rng: &ChaCha8Rng) -> Vec<u8> {
    let mut b = Vec::with_capacity(56);
    b.extend_from_slice(&rng.get_seed());
    b.extend_from_slice(&rng.get_stream().to_le_bytes());
    b.extend_from_slice(&rng.get_word_pos().to_le_bytes());
    b
}

fn rng_from_blob(b: &[u8]) -> Result<ChaCha8Rng> {
    use rand::SeedableRng;
    if b.len() != 56 {
        return Err(Error::CheckpointCorrupt(format!("rng blob of {} bytes", b.len())));
    }
    let mut rng = ChaCha8Rng::from_seed(b[..32].try_into().unwrap());
    rng.set_stream(u64::from_le_bytes(b[32..40].try_into().unwrap()));
    rng.set_word_pos(u128::from_le_bytes(b[40..56].try_into().unwrap()));
    Ok(rng)
}

pub fn encode(config: &TrainConfig, s: &Snapshot) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.bytes(MAGIC);
    w.u32(VERSION);
    w.bytes(&config.digest());
    let qb: Vec<(String, Tensor)> = s.net.buffers().into_iter().collect();
    let tb: Vec<(String, Tensor)> = s.target.buffers().into_iter().collect();
    let mut all = net_tensors("q.", &s.net, &qb);
    all.extend(net_tensors("target.", &s.target, &tb));
    w.tensors(all.into_iter());
    w.tensors(s.net.params().cache().iter().map(|(k, t)| (k.clone(), t)));
    w.u32(3);
    w.u64(s.counters.agent_steps);
    w.u64(s.counters.episodes);
    w.u64(s.counters.updates);
    let blob = rng_blob(&s.rng);
    w.u32(blob.len() as u32);
    w.bytes(&blob);

    w.bytes(REPLAY_TAG);
    let (c, r) = s.memory.dup_params();
    w.u64(s.memory.capacity() as u64);
    w.f64(c);
    w.f64(r);
    w.u64(s.memory.next_seq());
    let records = s.memory.records();
    w.u64(records.len() as u64);
    for (t, seqs) in records {
        w.u64(t.episode_id);
        w.u64(t.step_index);
        w.u8(t.action_index as u8);
        w.f64(t.reward);
        w.u8(t.done as u8);
        w.u32(t.observation.width as u32);
        w.u32(t.observation.height as u32);
        w.bytes(&t.observation.pixels);
        w.u32(seqs.len() as u32);
        for q in seqs {
            w.u64(q);
        }
    }
    let sum: [u8; 32] = Sha256::digest(&w.0).into();
    w.bytes(&sum);
    w.0
}

fn fill_net(net: &mut QNetwork, prefix: &str, tensors: &mut Vec<(String, Tensor)>) -> Result<()> {
    let names: Vec<String> = net.params().names().map(str::to_string).collect();
    let buffers: Vec<String> = net.buffers().into_keys().collect();
    for name in names.iter().chain(&buffers) {
        let full = format!("{prefix}{name}");
        let idx = tensors
            .iter()
            .position(|(k, _)| *k == full)
            .ok_or_else(|| Error::KeyMismatch(format!("checkpoint lacks {full}")))?;
        let (_, t) = tensors.swap_remove(idx);
        if names.contains(name) {
            let slot = net.params_mut().get_mut(name).expect("listed name");
            if slot.shape() != t.shape() {
                return Err(Error::Shape(format!("{full}: checkpoint {:?} vs {:?}", t.shape(), slot.shape())));
            }
            *slot = t;
        } else {
            net.set_buffer(name, t)?;
        }
    }
    Ok(())
}

pub fn decode(config: &TrainConfig, bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::CheckpointVersion("bad magic bytes, not a checkpoint".into()));
    }
    let mut r = Reader { buf: bytes, pos: 4 };
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::CheckpointVersion(format!("format version {version}, expected {VERSION}")));
    }
    if bytes.len() < 32 + 8 {
        return Err(Error::CheckpointCorrupt("truncated".into()));
    }
    let (body, sum) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != sum {
        return Err(Error::CheckpointCorrupt("checksum mismatch (truncated or damaged file)".into()));
    }
    r.buf = body;
    if r.take(32)? != config.digest() {
        return Err(Error::DigestMismatch);
    }
    let net_cfg = config.network()?;
    let mut tensors = r.tensors()?;
    let mut zero = rand::rngs::mock::StepRng::new(0, 0);
    let mut net = QNetwork::new(net_cfg.clone(), Init::Zeros, &mut zero)?;
    let mut target = QNetwork::new(net_cfg, Init::Zeros, &mut zero)?;
    fill_net(&mut net, "q.", &mut tensors)?;
    fill_net(&mut target, "target.", &mut tensors)?;
    if let Some((k, _)) = tensors.first() {
        return Err(Error::KeyMismatch(format!("unexpected tensor {k}")));
    }
    let cache = r.tensors()?.into_iter().collect();
    net.params_mut().set_cache(cache)?;
    if r.u32()? != 3 {
        return Err(Error::CheckpointCorrupt("expected 3 counters".into()));
    }
    let counters = Counters {
        agent_steps: r.u64()?,
        episodes: r.u64()?,
        updates: r.u64()?,
    };
    let blob_len = r.u32()? as usize;
    let rng = rng_from_blob(r.take(blob_len)?)?;

    if r.take(4)? != REPLAY_TAG {
        return Err(Error::CheckpointCorrupt("missing replay section".into()));
    }
    let capacity = r.u64()? as usize;
    let dup_c = r.f64()?;
    let dup_r = r.f64()?;
    let next_seq = r.u64()?;
    let n = r.u64()? as usize;
    let mut records = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let episode_id = r.u64()?;
        let step_index = r.u64()?;
        let action_index = r.u8()? as usize;
        let reward = r.f64()?;
        let done = r.u8()? != 0;
        let w = r.u32()? as usize;
        let h = r.u32()? as usize;
        let pixels = r.take(w * h)?.to_vec();
        let copies = r.u32()? as usize;
        let mut seqs = Vec::with_capacity(copies.min(64));
        for _ in 0..copies {
            seqs.push(r.u64()?);
        }
        records.push((
            Transition {
                observation: ObservationFrame::new(w, h, pixels)?,
                action_index,
                reward,
                done,
                episode_id,
                step_index,
            },
            seqs,
        ));
    }
    if capacity == 0 || !(dup_r > 0.0) {
        return Err(Error::CheckpointCorrupt("replay parameters".into()));
    }
    let memory = ReplayMemory::restore(capacity, dup_c, dup_r, records, next_seq)?;
    if r.pos != body.len() {
        return Err(Error::CheckpointCorrupt(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok(Snapshot {
        net,
        target,
        counters,
        rng,
        memory,
    })
}

pub fn save(path: &Path, config: &TrainConfig, s: &Snapshot) -> Result<()> {
    write_atomic(path, &encode(config, s))?;
    Ok(())
}

pub fn load(path: &Path, config: &TrainConfig) -> Result<Snapshot> {
    decode(config, &std::fs::read(path)?)
}

/// Only the current network, for evaluation and visualization.
pub fn load_network(path: &Path, config: &TrainConfig) -> Result<QNetwork> {
    Ok(load(path, config)?.net)
}
