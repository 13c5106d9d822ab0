//! Exponential cell model for Lagrangian cells.
//!
//! Between two consecutive characteristics the velocity is represented by the
//! two-parameter kernel family
//!
//!   u(s) = Ã e^{s−w} + B e^{−s},   s ∈ [0, w],  w = y_{i+1} − y_i,
//!
//! which is exact on the multipeakon sector (where u − uₓₓ is atomic, u is a
//! combination of e^{±x} between peaks) and reduces to linear interpolation
//! as w → 0.  Its induced energy density
//!
//!   u² + uₓ² = 2Ã² e^{2(s−w)} + 2B² e^{−2s}
//!
//! has closed-form products with the kernels e^{∓s}, so every convolution
//! weight is a cell-exact integral.  The μ-part of each weight is rescaled so
//! the cell carries exactly its transported energy ΔH.  Every exponential
//! below has a non-positive argument, whatever the cell width.

/// Cells narrower than this fall back to midpoint weights (the coefficient
/// formulas divide by 1 − e^{−2w}).
pub(crate) const W_SWITCH: f64 = 1e-9;

/// Fitted cell coefficients.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ExpCell {
    pub w: f64,
    pub a: f64,
    pub b: f64,
    /// e^{−w}
    pub em: f64,
    pub valid: bool,
}

impl ExpCell {
    pub fn fit(w: f64, u_left: f64, u_right: f64) -> Self {
        if !(w > W_SWITCH) {
            return Self {
                w,
                a: 0.0,
                b: 0.0,
                em: 1.0,
                valid: false,
            };
        }
        let em = (-w).exp();
        let denom = -(-2.0 * w).exp_m1(); // 1 - e^{-2w}
        Self {
            w,
            a: (u_right - u_left * em) / denom,
            b: (u_left - u_right * em) / denom,
            em,
            valid: true,
        }
    }

    /// u at local coordinate s ∈ [0, w].
    pub fn eval(&self, s: f64) -> f64 {
        self.a * (s - self.w).exp() + self.b * (-s).exp()
    }

    /// uₓ at local coordinate s ∈ [0, w].
    pub fn eval_slope(&self, s: f64) -> f64 {
        self.a * (s - self.w).exp() - self.b * (-s).exp()
    }

    /// ∫ (u² + uₓ²) ds of the model over the cell.
    pub fn mass_raw(&self) -> f64 {
        (self.a * self.a + self.b * self.b) * -(-2.0 * self.w).exp_m1()
    }

    /// Kernel integrals of the model energy density against e^{−(w−s)} and
    /// e^{−s} (left-travelling and right-travelling weights, referenced to
    /// the right and left cell edge respectively).
    pub fn mu_weights_raw(&self) -> (f64, f64) {
        let q1 = -(-self.w).exp_m1(); // 1 - e^{-w}
        let q3 = -(-3.0 * self.w).exp_m1(); // 1 - e^{-3w}
        let a2 = self.a * self.a;
        let b2 = self.b * self.b;
        let l = (2.0 / 3.0) * a2 * q3 + 2.0 * b2 * self.em * q1;
        let r = 2.0 * a2 * self.em * q1 + (2.0 / 3.0) * b2 * q3;
        (l, r)
    }

    /// Kernel integrals of the model u² against e^{−(w−s)} and e^{−s}.
    pub fn u2_weights(&self) -> (f64, f64) {
        let q1 = -(-self.w).exp_m1();
        let q3 = -(-3.0 * self.w).exp_m1();
        let a2 = self.a * self.a;
        let b2 = self.b * self.b;
        let cross = 2.0 * self.a * self.b * self.em * q1;
        let l = a2 / 3.0 * q3 + cross + b2 * self.em * q1;
        let r = a2 * self.em * q1 + cross + b2 / 3.0 * q3;
        (l, r)
    }

    /// ∫ u · (u² + uₓ²) ds of the model over the cell.
    pub fn f_moment_raw(&self) -> f64 {
        let q1 = -(-self.w).exp_m1();
        let q3 = -(-3.0 * self.w).exp_m1();
        let a = self.a;
        let b = self.b;
        (2.0 / 3.0) * a * a * a * q3
            + 2.0 * a * b * b * self.em * q1
            + 2.0 * a * a * b * self.em * q1
            + (2.0 / 3.0) * b * b * b * q3
    }
}
