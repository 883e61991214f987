use ndarray::{Array1, Array2, ArrayView1, ArrayViewD, ArrayViewMutD};

use crate::error::{CoreError, Result};
use crate::Real;

/// One gated recurrent unit:
/// z = sigmoid(W_z x + U_z h + b_z), r = sigmoid(W_r x + U_r h + b_r),
/// c = tanh(W_h x + U_h (r * h) + b_h), h' = (1 - z) * h + z * c.
#[derive(Debug, Clone, PartialEq)]
pub struct GruWeights {
    pub w_z: Array2<Real>,
    pub u_z: Array2<Real>,
    pub b_z: Array1<Real>,
    pub w_r: Array2<Real>,
    pub u_r: Array2<Real>,
    pub b_r: Array1<Real>,
    pub w_h: Array2<Real>,
    pub u_h: Array2<Real>,
    pub b_h: Array1<Real>,
}

impl GruWeights {
    pub fn zeros(d_in: usize, d_h: usize) -> Self {
        GruWeights {
            w_z: Array2::zeros((d_h, d_in)),
            u_z: Array2::zeros((d_h, d_h)),
            b_z: Array1::zeros(d_h),
            w_r: Array2::zeros((d_h, d_in)),
            u_r: Array2::zeros((d_h, d_h)),
            b_r: Array1::zeros(d_h),
            w_h: Array2::zeros((d_h, d_in)),
            u_h: Array2::zeros((d_h, d_h)),
            b_h: Array1::zeros(d_h),
        }
    }

    pub fn d_in(&self) -> usize {
        self.w_z.ncols()
    }

    pub fn d_h(&self) -> usize {
        self.w_z.nrows()
    }

    pub fn views(&self) -> Vec<ArrayViewD<'_, Real>> {
        vec![
            self.w_z.view().into_dyn(),
            self.u_z.view().into_dyn(),
            self.b_z.view().into_dyn(),
            self.w_r.view().into_dyn(),
            self.u_r.view().into_dyn(),
            self.b_r.view().into_dyn(),
            self.w_h.view().into_dyn(),
            self.u_h.view().into_dyn(),
            self.b_h.view().into_dyn(),
        ]
    }

    pub fn views_mut(&mut self) -> Vec<ArrayViewMutD<'_, Real>> {
        vec![
            self.w_z.view_mut().into_dyn(),
            self.u_z.view_mut().into_dyn(),
            self.b_z.view_mut().into_dyn(),
            self.w_r.view_mut().into_dyn(),
            self.u_r.view_mut().into_dyn(),
            self.b_r.view_mut().into_dyn(),
            self.w_h.view_mut().into_dyn(),
            self.u_h.view_mut().into_dyn(),
            self.b_h.view_mut().into_dyn(),
        ]
    }
}

fn sigmoid(x: Real) -> Real {
    1.0 / (1.0 + (-x).exp())
}

/// Intermediate values one forward step needs for its backward pass.
pub(crate) struct GruCache {
    pub x: Array1<Real>,
    pub h_prev: Array1<Real>,
    pub z: Array1<Real>,
    pub r: Array1<Real>,
    pub c: Array1<Real>,
}

pub(crate) fn gru_forward_cached(
    w: &GruWeights,
    x: ArrayView1<Real>,
    h_prev: ArrayView1<Real>,
) -> (Array1<Real>, GruCache) {
    debug_assert_eq!(x.len(), w.d_in());
    debug_assert_eq!(h_prev.len(), w.d_h());
    let z = (w.w_z.dot(&x) + w.u_z.dot(&h_prev) + &w.b_z).mapv(sigmoid);
    let r = (w.w_r.dot(&x) + w.u_r.dot(&h_prev) + &w.b_r).mapv(sigmoid);
    let rh = &r * &h_prev;
    let c = (w.w_h.dot(&x) + w.u_h.dot(&rh) + &w.b_h).mapv(Real::tanh);
    let h = (1.0 - &z) * &h_prev + &z * &c;
    let cache = GruCache {
        x: x.to_owned(),
        h_prev: h_prev.to_owned(),
        z,
        r,
        c,
    };
    (h, cache)
}

pub(crate) fn gru_forward(
    w: &GruWeights,
    x: ArrayView1<Real>,
    h_prev: ArrayView1<Real>,
) -> Array1<Real> {
    gru_forward_cached(w, x, h_prev).0
}

/// rank-1 update: a += x (outer) y
pub(crate) fn ger(a: &mut Array2<Real>, x: ArrayView1<Real>, y: ArrayView1<Real>) {
    debug_assert_eq!(a.nrows(), x.len());
    debug_assert_eq!(a.ncols(), y.len());
    for (mut row, &xi) in a.outer_iter_mut().zip(x.iter()) {
        if xi != 0.0 {
            row.scaled_add(xi, &y);
        }
    }
}

/// Backward through one GRU step. `dh` is the gradient of the loss with
/// respect to the step's output; weight gradients accumulate into `gw`.
/// Returns (d h_prev, d x).
pub(crate) fn gru_backward(
    w: &GruWeights,
    cache: &GruCache,
    dh: ArrayView1<Real>,
    gw: &mut GruWeights,
) -> (Array1<Real>, Array1<Real>) {
    let GruCache { x, h_prev, z, r, c } = cache;

    let dz = &dh * &(c - h_prev);
    let dc = &dh * z;
    let mut dh_prev = &dh * &(1.0 - z);

    // candidate: c = tanh(a_c), a_c = W_h x + U_h (r*h_prev) + b_h
    let da_c = dc * c.mapv(|v| 1.0 - v * v);
    ger(&mut gw.w_h, da_c.view(), x.view());
    let rh = r * h_prev;
    ger(&mut gw.u_h, da_c.view(), rh.view());
    gw.b_h += &da_c;
    let drh = da_c.dot(&w.u_h);
    let dr = &drh * h_prev;
    dh_prev += &(&drh * r);

    // gates
    let da_z = dz * z.mapv(|v| v * (1.0 - v));
    ger(&mut gw.w_z, da_z.view(), x.view());
    ger(&mut gw.u_z, da_z.view(), h_prev.view());
    gw.b_z += &da_z;
    dh_prev += &da_z.dot(&w.u_z);

    let da_r = dr * r.mapv(|v| v * (1.0 - v));
    ger(&mut gw.w_r, da_r.view(), x.view());
    ger(&mut gw.u_r, da_r.view(), h_prev.view());
    gw.b_r += &da_r;
    dh_prev += &da_r.dot(&w.u_r);

    let dx = da_z.dot(&w.w_z) + da_r.dot(&w.w_r) + da_c.dot(&w.w_h);
    (dh_prev, dx)
}

/// One GRU step with dimension checking, for callers outside the crate.
pub fn gru_cell(
    weights: &GruWeights,
    input: ArrayView1<Real>,
    state: ArrayView1<Real>,
) -> Result<Array1<Real>> {
    if input.len() != weights.d_in() || state.len() != weights.d_h() {
        return Err(CoreError::DimensionMismatch(format!(
            "gru_cell: input {} state {} vs weights ({}, {})",
            input.len(),
            state.len(),
            weights.d_in(),
            weights.d_h()
        )));
    }
    Ok(gru_forward(weights, input, state))
}
