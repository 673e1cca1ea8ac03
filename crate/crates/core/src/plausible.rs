//! Null-space decomposition of spectra with respect to a camera.
//!
//! Every spectrum splits uniquely into a part inside the column space of the
//! sensitivity matrix `S` (the fundamental spectrum, fixed by the RGB) and a
//! part inside its orthogonal complement, spanned by the columns of `N` and
//! invisible to the camera. A reconstruction built as
//! `S(SᵀS)⁻¹ρ + Nα` therefore reintegrates to `ρ` for any coefficients `α`.

use nalgebra::{DMatrix, DVector, FullPivLU};

use crate::error::{Error, Result};
use crate::spectral::{form_rgb, Rgb, SensitivitySet, Spectrum};

/// Entrywise tolerance for the model invariants.
pub const INVARIANT_TOLERANCE: f64 = 1e-10;

/// Precomputed projection machinery for one camera.
#[derive(Debug, Clone)]
pub struct NullSpaceModel {
    sensitivities: SensitivitySet,
    pinv_factor: DMatrix<f64>,
    null_basis: DMatrix<f64>,
    proj_s: DMatrix<f64>,
    proj_n: DMatrix<f64>,
    // LU of NᵀN; `None` when the basis is orthonormal and NᵀN = I.
    gram: Option<FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl PartialEq for NullSpaceModel {
    fn eq(&self, other: &Self) -> bool {
        self.sensitivities == other.sensitivities
            && self.pinv_factor == other.pinv_factor
            && self.null_basis == other.null_basis
            && self.proj_s == other.proj_s
            && self.proj_n == other.proj_n
    }
}

/// A member of the plausible set, identified by its RGB and null-space
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PlausibleDecomposition {
    pub rho: Rgb,
    pub alpha: Vec<f64>,
}

/// Affine map `α̃ = (α + offset) / divisor` that moves coefficients into a
/// nonnegative range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recentering {
    offset: f64,
    divisor: f64,
}

/// Residuals of the model invariants, all expected near zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantResiduals {
    /// max |SᵀN|
    pub st_n: f64,
    /// max |NᵀN − I|
    pub nt_n: f64,
    /// max |P^S + P^N − I|
    pub proj_sum: f64,
    /// max |P^S − (P^S)ᵀ|
    pub proj_symmetry: f64,
    /// max |P^S P^S − P^S|
    pub proj_idempotence: f64,
    /// max |Sᵀ S(SᵀS)⁻¹ − I|
    pub st_pinv: f64,
}

impl InvariantResiduals {
    pub fn max(&self) -> f64 {
        [
            self.st_n,
            self.nt_n,
            self.proj_sum,
            self.proj_symmetry,
            self.proj_idempotence,
            self.st_pinv,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Householder reflectors for a tall matrix: returns the full `n × n`
/// orthogonal factor `Q` and the `k × k` upper triangle `R` with `A = Q[:, :k] R`.
fn householder_full_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, k) = a.shape();
    let mut r = a.clone();
    let mut q = DMatrix::<f64>::identity(n, n);
    for j in 0..k {
        let x = r.view((j, j), (n - j, 1)).clone_owned();
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x;
        v[0] += sign * norm;
        let vnorm2 = v.norm_squared();
        // R ← H R on the trailing block, Q ← Q H on the trailing columns.
        for c in j..k {
            let dot: f64 = (0..n - j).map(|i| v[i] * r[(j + i, c)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in 0..n - j {
                r[(j + i, c)] -= f * v[i];
            }
        }
        for row in 0..n {
            let dot: f64 = (0..n - j).map(|i| q[(row, j + i)] * v[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in 0..n - j {
                q[(row, j + i)] -= f * v[i];
            }
        }
    }
    let upper = DMatrix::from_fn(k, k, |i, c| if i <= c { r[(i, c)] } else { 0.0 });
    (q, upper)
}

/// Flips each column so its first entry of non-negligible magnitude is positive.
fn canonical_signs(basis: &mut DMatrix<f64>) {
    for mut col in basis.column_iter_mut() {
        let scale = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let threshold = scale * 1e-12;
        if let Some(first) = col.iter().find(|v| v.abs() > threshold).copied() {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

impl NullSpaceModel {
    /// Builds the model with a deterministic orthonormal null basis: the
    /// trailing `n − 3` columns of the full Householder QR factor of `S`.
    pub fn build(s: &SensitivitySet) -> Result<Self> {
        let n = s.bands();
        let (q, r) = householder_full_qr(s.matrix());
        let diag_max = (0..3).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let diag_min = (0..3).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if !(diag_max > 0.0 && diag_min / diag_max > crate::spectral::RANK_TOLERANCE) {
            return Err(Error::Rank("triangular factor of S is singular".into()));
        }

        // S(SᵀS)⁻¹ = Q₁R⁻ᵀ, i.e. solve R Xᵀ = Q₁ᵀ by back substitution.
        let q1t = q.columns(0, 3).transpose();
        let xt = r
            .solve_upper_triangular(&q1t)
            .ok_or_else(|| Error::Rank("triangular solve failed".into()))?;
        let pinv_factor = xt.transpose();

        let mut null_basis = q.columns(3, n - 3).clone_owned();
        canonical_signs(&mut null_basis);

        let proj_s = &pinv_factor * s.matrix().transpose();
        let proj_n = &null_basis * null_basis.transpose();
        Ok(Self {
            sensitivities: s.clone(),
            pinv_factor,
            null_basis,
            proj_s,
            proj_n,
            gram: None,
        })
    }

    /// Uses a caller-supplied basis of the null space, which need not be
    /// orthonormal. Columns must be orthogonal to `S` and linearly independent.
    pub fn with_basis(s: &SensitivitySet, basis: DMatrix<f64>) -> Result<Self> {
        let n = s.bands();
        if basis.nrows() != n || basis.ncols() != n - 3 {
            return Err(Error::Dimension(format!(
                "null basis is {}x{}, expected {n}x{}",
                basis.nrows(),
                basis.ncols(),
                n - 3
            )));
        }
        let scale = max_abs(&basis).max(f64::MIN_POSITIVE);
        let leak = max_abs(&(s.matrix().transpose() * &basis)) / (scale * max_abs(s.matrix()));
        if leak > INVARIANT_TOLERANCE {
            return Err(Error::Argument(format!(
                "basis is not orthogonal to the sensitivities (relative |SᵀN| = {leak:e})"
            )));
        }
        let base = Self::build(s)?;
        let gram_matrix = basis.transpose() * &basis;
        let identity = DMatrix::<f64>::identity(n - 3, n - 3);
        let orthonormal = max_abs(&(&gram_matrix - &identity)) <= INVARIANT_TOLERANCE;
        let (gram, proj_n) = if orthonormal {
            let proj_n = &basis * basis.transpose();
            (None, proj_n)
        } else {
            let lu = gram_matrix.full_piv_lu();
            if !lu.is_invertible() {
                return Err(Error::Rank("null basis columns are linearly dependent".into()));
            }
            // P^N = N (NᵀN)⁻¹ Nᵀ
            let coeffs = lu
                .solve(&basis.transpose())
                .ok_or_else(|| Error::Rank("null basis Gram matrix is singular".into()))?;
            (Some(lu), &basis * coeffs)
        };
        Ok(Self {
            null_basis: basis,
            proj_n,
            gram,
            ..base
        })
    }

    /// Reassembles a model from stored matrices; used by the binary reader.
    pub(crate) fn from_parts(
        sensitivities: SensitivitySet,
        pinv_factor: DMatrix<f64>,
        null_basis: DMatrix<f64>,
        proj_s: DMatrix<f64>,
        proj_n: DMatrix<f64>,
    ) -> Result<Self> {
        let n = sensitivities.bands();
        let shapes = [
            (pinv_factor.shape(), (n, 3)),
            (null_basis.shape(), (n, n - 3)),
            (proj_s.shape(), (n, n)),
            (proj_n.shape(), (n, n)),
        ];
        if let Some((got, want)) = shapes.iter().find(|(g, w)| g != w) {
            return Err(Error::Dimension(format!("stored matrix is {got:?}, expected {want:?}")));
        }
        let gram_matrix = null_basis.transpose() * &null_basis;
        let identity = DMatrix::<f64>::identity(n - 3, n - 3);
        let gram = if max_abs(&(&gram_matrix - &identity)) <= INVARIANT_TOLERANCE {
            None
        } else {
            let lu = gram_matrix.full_piv_lu();
            if !lu.is_invertible() {
                return Err(Error::Rank("stored null basis is degenerate".into()));
            }
            Some(lu)
        };
        Ok(Self {
            sensitivities,
            pinv_factor,
            null_basis,
            proj_s,
            proj_n,
            gram,
        })
    }

    pub fn sensitivities(&self) -> &SensitivitySet {
        &self.sensitivities
    }

    /// `S(SᵀS)⁻¹`, `n × 3`.
    pub fn pinv_factor(&self) -> &DMatrix<f64> {
        &self.pinv_factor
    }

    /// `N`, `n × (n − 3)`.
    pub fn null_basis(&self) -> &DMatrix<f64> {
        &self.null_basis
    }

    pub fn proj_s(&self) -> &DMatrix<f64> {
        &self.proj_s
    }

    pub fn proj_n(&self) -> &DMatrix<f64> {
        &self.proj_n
    }

    pub fn bands(&self) -> usize {
        self.sensitivities.bands()
    }

    /// Number of null-space coefficients, `n − 3`.
    pub fn null_dim(&self) -> usize {
        self.bands() - 3
    }

    pub fn is_orthonormal(&self) -> bool {
        self.gram.is_none()
    }

    pub fn residuals(&self) -> InvariantResiduals {
        let n = self.bands();
        let s = self.sensitivities.matrix();
        let eye_n = DMatrix::<f64>::identity(n, n);
        let eye_k = DMatrix::<f64>::identity(n - 3, n - 3);
        let eye_3 = DMatrix::<f64>::identity(3, 3);
        InvariantResiduals {
            st_n: max_abs(&(s.transpose() * &self.null_basis)),
            nt_n: max_abs(&(self.null_basis.transpose() * &self.null_basis - eye_k)),
            proj_sum: max_abs(&(&self.proj_s + &self.proj_n - &eye_n)),
            proj_symmetry: max_abs(&(&self.proj_s - self.proj_s.transpose())),
            proj_idempotence: max_abs(&(&self.proj_s * &self.proj_s - &self.proj_s)),
            st_pinv: max_abs(&(s.transpose() * &self.pinv_factor - eye_3)),
        }
    }

    /// `r∥ = S(SᵀS)⁻¹ρ`, the unique member of the plausible set inside the
    /// column space of `S`.
    pub fn fundamental_spectrum(&self, rho: Rgb) -> Spectrum {
        let v = &self.pinv_factor * rho.to_vector();
        Spectrum::from_vector(*self.sensitivities.grid(), &v)
    }

    /// `(ρ, α)` with `ρ = Sᵀr` and `α = (NᵀN)⁻¹Nᵀr`.
    pub fn extract_alpha(&self, r: &Spectrum) -> Result<PlausibleDecomposition> {
        let rho = form_rgb(r, &self.sensitivities)?;
        let projected = self.null_basis.transpose() * r.to_vector();
        let alpha = match &self.gram {
            None => projected,
            Some(lu) => lu
                .solve(&projected)
                .ok_or_else(|| Error::Rank("null basis Gram matrix is singular".into()))?,
        };
        Ok(PlausibleDecomposition {
            rho,
            alpha: alpha.iter().copied().collect(),
        })
    }

    /// `r_rec = S(SᵀS)⁻¹ρ + Nα`; reintegrates to `ρ` for every `α`.
    pub fn reconstruct(&self, rho: Rgb, alpha: &[f64]) -> Result<Spectrum> {
        if alpha.len() != self.null_dim() {
            return Err(Error::Dimension(format!(
                "{} null-space coefficients, expected {}",
                alpha.len(),
                self.null_dim()
            )));
        }
        let a = DVector::from_column_slice(alpha);
        let v = &self.pinv_factor * rho.to_vector() + &self.null_basis * a;
        Ok(Spectrum::from_vector(*self.sensitivities.grid(), &v))
    }

    pub fn reconstruct_decomposition(&self, d: &PlausibleDecomposition) -> Result<Spectrum> {
        self.reconstruct(d.rho, &d.alpha)
    }
}

impl Recentering {
    /// `(α + 1) / 2`, for coefficients in [−1, 1].
    pub const UNAUGMENTED: Recentering = Recentering {
        offset: 1.0,
        divisor: 2.0,
    };

    /// `(α + 10) / 20`, for coefficients scaled by exposures up to 10×.
    pub const AUGMENTED: Recentering = Recentering {
        offset: 10.0,
        divisor: 20.0,
    };

    pub fn new(offset: f64, divisor: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::Argument(format!("recentering offset {offset} is not finite")));
        }
        if !(divisor.is_finite() && divisor > 0.0) {
            return Err(Error::Argument(format!(
                "recentering divisor {divisor} must be positive"
            )));
        }
        Ok(Self { offset, divisor })
    }

    /// Smallest symmetric recentering that maps `[lo, hi]` into `[0, 1]`.
    pub fn covering(lo: f64, hi: f64) -> Result<Self> {
        let half = lo.abs().max(hi.abs());
        if !(half.is_finite() && half > 0.0) {
            return Err(Error::Argument(format!("cannot cover range [{lo}, {hi}]")));
        }
        Self::new(half, 2.0 * half)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn divisor(&self) -> f64 {
        self.divisor
    }

    pub fn apply(&self, alpha: f64) -> f64 {
        (alpha + self.offset) / self.divisor
    }

    pub fn invert(&self, alpha_tilde: f64) -> f64 {
        alpha_tilde * self.divisor - self.offset
    }

    pub fn recenter(&self, alpha: &[f64]) -> Vec<f64> {
        alpha.iter().map(|a| self.apply(*a)).collect()
    }

    pub fn unrecenter(&self, alpha_tilde: &[f64]) -> Vec<f64> {
        alpha_tilde.iter().map(|a| self.invert(*a)).collect()
    }
}

/// Global minimum and maximum over all null-space coefficients of a stream
/// of spectra.
pub fn alpha_range_report<'a, I>(model: &NullSpaceModel, spectra: I) -> Result<(f64, f64)>
where
    I: IntoIterator<Item = &'a Spectrum>,
{
    let mut range: Option<(f64, f64)> = None;
    for r in spectra {
        let d = model.extract_alpha(r)?;
        for a in d.alpha {
            range = Some(match range {
                None => (a, a),
                Some((lo, hi)) => (lo.min(a), hi.max(a)),
            });
        }
    }
    range.ok_or_else(|| Error::Argument("alpha range of an empty stream".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralGrid;
    use approx::assert_abs_diff_eq;

    fn unit(n: usize, k: usize) -> Vec<f64> {
        (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
    }

    fn indicator5() -> SensitivitySet {
        let g = SpectralGrid::new(400.0, 10.0, 5).unwrap();
        let (a, b, c) = (unit(5, 0), unit(5, 1), unit(5, 2));
        SensitivitySet::from_columns(g, [&a, &b, &c]).unwrap()
    }

    fn tilted4() -> SensitivitySet {
        let g = SpectralGrid::new(400.0, 10.0, 4).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = (unit(4, 0), unit(4, 1));
        let c = [0.0, 0.0, h, h];
        SensitivitySet::from_columns(g, [&a, &b, &c]).unwrap()
    }

    #[test]
    fn indicator_null_space() {
        let m = NullSpaceModel::build(&indicator5()).unwrap();
        let n = m.null_basis();
        assert_eq!(n.shape(), (5, 2));
        for i in 0..5 {
            for j in 0..2 {
                let expected = if i == j + 3 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(n[(i, j)], expected, epsilon = 1e-15);
            }
        }
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, 0.0, 0.0]));
        assert_abs_diff_eq!(m.proj_s(), &diag, epsilon = 1e-15);
        assert!(m.is_orthonormal());
    }

    #[test]
    fn tilted_null_vector() {
        let m = NullSpaceModel::build(&tilted4()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let n = m.null_basis();
        assert_eq!(n.shape(), (4, 1));
        let expected = [0.0, 0.0, h, -h];
        for i in 0..4 {
            assert_abs_diff_eq!(n[(i, 0)], expected[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn fundamental_spectrum_examples() {
        let m = NullSpaceModel::build(&indicator5()).unwrap();
        let f = m.fundamental_spectrum(Rgb::new(1.0, 2.0, 3.0));
        for (got, want) in f.values().iter().zip([1.0, 2.0, 3.0, 0.0, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        assert!(m.fundamental_spectrum(Rgb::ZERO).values().iter().all(|v| *v == 0.0));

        let t = NullSpaceModel::build(&tilted4()).unwrap();
        let f = t.fundamental_spectrum(Rgb::new(0.0, 0.0, 2f64.sqrt()));
        for (got, want) in f.values().iter().zip([0.0, 0.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn extract_alpha_examples() {
        let m = NullSpaceModel::build(&indicator5()).unwrap();
        let g = *m.sensitivities().grid();
        let r = Spectrum::new(g, vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let d = m.extract_alpha(&r).unwrap();
        assert_eq!(d.rho, Rgb::new(1.0, 2.0, 3.0));
        assert_abs_diff_eq!(d.alpha[0], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.alpha[1], 5.0, epsilon = 1e-14);

        let parallel = m.fundamental_spectrum(Rgb::new(0.3, -1.0, 2.0));
        let d = m.extract_alpha(&parallel).unwrap();
        assert!(d.alpha.iter().all(|a| a.abs() < 1e-14));

        for j in 0..2 {
            let col: Vec<f64> = m.null_basis().column(j).iter().copied().collect();
            let d = m.extract_alpha(&Spectrum::new(g, col).unwrap()).unwrap();
            assert!(d.rho.max_abs() < 1e-14);
            for (k, a) in d.alpha.iter().enumerate() {
                assert_abs_diff_eq!(*a, if k == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn reconstruct_examples() {
        let m = NullSpaceModel::build(&indicator5()).unwrap();
        let r = m.reconstruct(Rgb::new(1.0, 2.0, 3.0), &[4.0, 5.0]).unwrap();
        for (got, want) in r.values().iter().zip([1.0, 2.0, 3.0, 4.0, 5.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        let rho = Rgb::new(0.2, 0.1, 0.7);
        assert_eq!(m.reconstruct(rho, &[0.0, 0.0]).unwrap(), m.fundamental_spectrum(rho));
        assert!(matches!(m.reconstruct(rho, &[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn grid_mismatch_on_extract() {
        let m = NullSpaceModel::build(&indicator5()).unwrap();
        let other = Spectrum::zeros(SpectralGrid::new(0.0, 1.0, 5).unwrap());
        assert!(matches!(m.extract_alpha(&other), Err(Error::Dimension(_))));
    }

    #[test]
    fn non_orthonormal_basis_uses_gram_solve() {
        let s = indicator5();
        // Columns e4 + e5 and 2·e5: independent but neither unit nor orthogonal.
        let basis = DMatrix::from_column_slice(5, 2, &[0., 0., 0., 1., 1., 0., 0., 0., 0., 2.]);
        let m = NullSpaceModel::with_basis(&s, basis).unwrap();
        assert!(!m.is_orthonormal());
        let r = Spectrum::new(*s.grid(), vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let d = m.extract_alpha(&r).unwrap();
        // 4·e4 + 5·e5 = 4·(e4 + e5) + 0.5·(2·e5)
        assert_abs_diff_eq!(d.alpha[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.alpha[1], 0.5, epsilon = 1e-12);
        let back = m.reconstruct_decomposition(&d).unwrap();
        for (a, b) in back.values().iter().zip(r.values()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        assert!(m.residuals().proj_sum < 1e-12);
    }

    #[test]
    fn bad_user_basis_is_rejected() {
        let s = indicator5();
        let leaking = DMatrix::from_column_slice(5, 2, &[1., 0., 0., 1., 0., 0., 0., 0., 0., 1.]);
        assert!(NullSpaceModel::with_basis(&s, leaking).is_err());
        let dependent = DMatrix::from_column_slice(5, 2, &[0., 0., 0., 1., 0., 0., 0., 0., 2., 0.]);
        assert!(matches!(NullSpaceModel::with_basis(&s, dependent), Err(Error::Rank(_))));
        let wrong_shape = DMatrix::zeros(5, 3);
        assert!(matches!(
            NullSpaceModel::with_basis(&s, wrong_shape),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn recentering_examples() {
        let rc = Recentering::UNAUGMENTED;
        assert_eq!(rc.apply(-1.0), 0.0);
        assert_eq!(rc.apply(1.0), 1.0);
        assert_eq!(rc.apply(0.0), 0.5);
        let aug = Recentering::AUGMENTED;
        assert_eq!(aug.apply(0.0), 0.5);
        assert_eq!(aug.invert(0.5), 0.0);
        assert_eq!(aug.recenter(&[-10.0, 10.0]), vec![0.0, 1.0]);
        assert!(Recentering::new(0.0, 0.0).is_err());
        assert!(Recentering::new(0.0, -2.0).is_err());
        let cover = Recentering::covering(-0.3, 0.7).unwrap();
        assert_eq!(cover.recenter(&[-0.7, 0.7]), vec![0.0, 1.0]);
    }

    #[test]
    fn alpha_range_examples() {
        let m = NullSpaceModel::build(&tilted4()).unwrap();
        let g = *m.sensitivities().grid();
        let fundamental = m.fundamental_spectrum(Rgb::new(1.0, 2.0, 3.0));
        let (lo, hi) = alpha_range_report(&m, [&fundamental]).unwrap();
        assert!(lo.abs() < 1e-14 && hi.abs() < 1e-14);

        let col: Vec<f64> = m.null_basis().column(0).iter().copied().collect();
        let a = Spectrum::new(g, col.iter().map(|v| -0.3 * v).collect()).unwrap();
        let b = Spectrum::new(g, col.iter().map(|v| 0.7 * v).collect()).unwrap();
        let (lo, hi) = alpha_range_report(&m, [&a, &b]).unwrap();
        assert_abs_diff_eq!(lo, -0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, 0.7, epsilon = 1e-14);

        let empty: Vec<&Spectrum> = Vec::new();
        assert!(matches!(alpha_range_report(&m, empty), Err(Error::Argument(_))));
    }

    #[test]
    fn cie_model_invariants() {
        let m = NullSpaceModel::build(&SensitivitySet::cie1964()).unwrap();
        assert_eq!(m.null_dim(), 28);
        let res = m.residuals();
        assert!(res.max() < INVARIANT_TOLERANCE, "{res:?}");
    }
}
