use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::gru::GruWeights;
use crate::error::{CoreError, Result};
use crate::Real;

const CHECKPOINT_MAGIC: &[u8; 8] = b"ATNVCKPT";
const CHECKPOINT_VERSION: u32 = 1;

/// Sizes everything in the network is built from. The attention layer width
/// equals `d_h` and the output intermediate width equals `d_emb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub d_emb: usize,
    pub d_h: usize,
    pub v_src: usize,
    pub v_tgt: usize,
}

impl ModelDims {
    pub fn d_attn(&self) -> usize {
        self.d_h
    }

    pub fn d_out(&self) -> usize {
        self.d_emb
    }

    /// Width of the input to the output layer: [s_t; emb(y_{t-1}); H_t].
    pub fn d_readout(&self) -> usize {
        self.d_h + self.d_emb + 2 * self.d_h
    }
}

/// All trainable weights. The same struct doubles as a gradient and Adam
/// moment container, so every elementwise walk goes through [`Self::views`]
/// / [`Self::views_mut`], which fix the tensor order used everywhere
/// (checkpoints included).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub src_emb: Array2<Real>,
    pub tgt_emb: Array2<Real>,
    pub enc_fwd: GruWeights,
    pub enc_bwd: GruWeights,
    pub dec_u: GruWeights,
    pub dec_q: GruWeights,
    /// Attention: e_{t,j} = v . tanh(W_a s'_t + U_a h_j).
    pub attn_w: Array2<Real>,
    pub attn_u: Array2<Real>,
    pub attn_v: Array1<Real>,
    /// Initial decoder state: s_0 = tanh(W_init hbwd_1 + b_init).
    pub init_w: Array2<Real>,
    pub init_b: Array1<Real>,
    /// Output layer: o_t = tanh(W_o [s_t; emb; H_t] + b_o).
    pub out_w: Array2<Real>,
    pub out_b: Array1<Real>,
    /// Final projection to the target vocabulary.
    pub proj_w: Array2<Real>,
    pub proj_b: Array1<Real>,
}

impl ModelParams {
    /// Seeded uniform initialization in [-0.08, 0.08].
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let dist = Uniform::new(-0.08 as Real, 0.08 as Real);
        let mut p = Self::zeros(dims);
        for mut t in p.views_mut() {
            for x in t.iter_mut() {
                *x = dist.sample(&mut rng);
            }
        }
        p
    }

    pub fn zeros(dims: ModelDims) -> Self {
        let (de, dh) = (dims.d_emb, dims.d_h);
        ModelParams {
            dims,
            src_emb: Array2::zeros((dims.v_src, de)),
            tgt_emb: Array2::zeros((dims.v_tgt, de)),
            enc_fwd: GruWeights::zeros(de, dh),
            enc_bwd: GruWeights::zeros(de, dh),
            dec_u: GruWeights::zeros(de, dh),
            dec_q: GruWeights::zeros(2 * dh, dh),
            attn_w: Array2::zeros((dims.d_attn(), dh)),
            attn_u: Array2::zeros((dims.d_attn(), 2 * dh)),
            attn_v: Array1::zeros(dims.d_attn()),
            init_w: Array2::zeros((dh, dh)),
            init_b: Array1::zeros(dh),
            out_w: Array2::zeros((dims.d_out(), dims.d_readout())),
            out_b: Array1::zeros(dims.d_out()),
            proj_w: Array2::zeros((dims.v_tgt, dims.d_out())),
            proj_b: Array1::zeros(dims.v_tgt),
        }
    }

    /// Every tensor, in the fixed serialization order.
    pub fn views(&self) -> Vec<ArrayViewD<'_, Real>> {
        let mut v = vec![self.src_emb.view().into_dyn(), self.tgt_emb.view().into_dyn()];
        v.extend(self.enc_fwd.views());
        v.extend(self.enc_bwd.views());
        v.extend(self.dec_u.views());
        v.extend(self.dec_q.views());
        v.push(self.attn_w.view().into_dyn());
        v.push(self.attn_u.view().into_dyn());
        v.push(self.attn_v.view().into_dyn());
        v.push(self.init_w.view().into_dyn());
        v.push(self.init_b.view().into_dyn());
        v.push(self.out_w.view().into_dyn());
        v.push(self.out_b.view().into_dyn());
        v.push(self.proj_w.view().into_dyn());
        v.push(self.proj_b.view().into_dyn());
        v
    }

    pub fn views_mut(&mut self) -> Vec<ArrayViewMutD<'_, Real>> {
        let mut v = vec![
            self.src_emb.view_mut().into_dyn(),
            self.tgt_emb.view_mut().into_dyn(),
        ];
        v.extend(self.enc_fwd.views_mut());
        v.extend(self.enc_bwd.views_mut());
        v.extend(self.dec_u.views_mut());
        v.extend(self.dec_q.views_mut());
        v.push(self.attn_w.view_mut().into_dyn());
        v.push(self.attn_u.view_mut().into_dyn());
        v.push(self.attn_v.view_mut().into_dyn());
        v.push(self.init_w.view_mut().into_dyn());
        v.push(self.init_b.view_mut().into_dyn());
        v.push(self.out_w.view_mut().into_dyn());
        v.push(self.out_b.view_mut().into_dyn());
        v.push(self.proj_w.view_mut().into_dyn());
        v.push(self.proj_b.view_mut().into_dyn());
        v
    }

    pub fn num_params(&self) -> usize {
        self.views().iter().map(|t| t.len()).sum()
    }

    pub fn set_zero(&mut self) {
        for mut t in self.views_mut() {
            t.fill(0.0);
        }
    }

    /// self += other, elementwise across all tensors.
    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.dims, other.dims);
        for (mut a, b) in self.views_mut().into_iter().zip(other.views()) {
            a.zip_mut_with(&b, |x, &y| *x += y);
        }
    }

    pub fn scale(&mut self, c: Real) {
        for mut t in self.views_mut() {
            t.mapv_inplace(|x| x * c);
        }
    }

    pub fn l2_norm(&self) -> Real {
        self.views()
            .iter()
            .map(|t| t.iter().map(|&x| x * x).sum::<Real>())
            .sum::<Real>()
            .sqrt()
    }

    /// Versioned binary checkpoint: magic, version, dimension header, then
    /// every tensor in [`Self::views`] order as little-endian 64-bit floats.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        for dim in [
            self.dims.d_emb,
            self.dims.d_h,
            self.dims.v_src,
            self.dims.v_tgt,
        ] {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for t in self.views() {
            for &x in t.iter() {
                w.write_all(&(x as f64).to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(CoreError::BadFormat("not a model checkpoint".into()));
        }
        let version = read_u32(&mut r)?;
        if version != CHECKPOINT_VERSION {
            return Err(CoreError::BadFormat(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let dims = ModelDims {
            d_emb: read_u32(&mut r)? as usize,
            d_h: read_u32(&mut r)? as usize,
            v_src: read_u32(&mut r)? as usize,
            v_tgt: read_u32(&mut r)? as usize,
        };
        if dims.d_emb == 0 || dims.d_h == 0 || dims.v_src == 0 || dims.v_tgt == 0 {
            return Err(CoreError::BadFormat("zero dimension in checkpoint".into()));
        }
        let mut p = Self::zeros(dims);
        for mut t in p.views_mut() {
            for x in t.iter_mut() {
                *x = read_f64(&mut r)? as Real;
            }
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(CoreError::BadFormat("trailing data in checkpoint".into()));
        }
        Ok(p)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}
