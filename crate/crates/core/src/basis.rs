//! Scaled monomial bases on cells (3D) and faces (2D local coordinates).
//!
//! A scaled monomial of multi-index `α` centred at `c` with scale `h` is
//! `∏_i ((x_i - c_i) / h)^{α_i}`. All bases list their multi-indices in
//! graded lexicographic order: total degree first, then descending powers of
//! the first coordinate, then the second. Index 0 is always the constant.

use std::ops::Range;

/// Multi-index of a monomial in `D` variables.
pub type MultiIndex<const D: usize> = [usize; D];

/// Binomial coefficient `C(n, r)`; zero when `r > n`.
pub fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension of the space of polynomials of degree `<= k` in `d` variables.
pub fn poly_dim(k: usize, d: usize) -> usize {
    binomial(k + d, d)
}

/// Dimension of polynomials of degree `<= k` with the convention that
/// negative degrees give the empty space.
pub fn poly_dim_signed(k: isize, d: usize) -> usize {
    if k < 0 {
        0
    } else {
        poly_dim(k as usize, d)
    }
}

/// Number of monomials of degree exactly `s` in `d` variables.
pub fn homogeneous_dim(s: usize, d: usize) -> usize {
    if d == 0 {
        return usize::from(s == 0);
    }
    binomial(s + d - 1, d - 1)
}

fn push_homogeneous<const D: usize>(
    s: usize,
    axis: usize,
    current: &mut [usize; D],
    out: &mut Vec<[usize; D]>,
) {
    if axis == D - 1 {
        current[axis] = s;
        out.push(*current);
        return;
    }
    for a in (0..=s).rev() {
        current[axis] = a;
        push_homogeneous(s - a, axis + 1, current, out);
    }
}

/// Ordered multi-indices up to degree `k` together with the index range of
/// each homogeneous slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisLayout<const D: usize> {
    pub degree: usize,
    pub indices: Vec<MultiIndex<D>>,
    pub slices: Vec<Range<usize>>,
}

impl<const D: usize> BasisLayout<D> {
    pub fn new(k: usize) -> Self {
        let mut indices = Vec::with_capacity(poly_dim(k, D));
        let mut slices = Vec::with_capacity(k + 1);
        let mut scratch = [0usize; D];
        for s in 0..=k {
            let start = indices.len();
            if D == 0 {
                if s == 0 {
                    indices.push(scratch);
                }
            } else {
                push_homogeneous(s, 0, &mut scratch, &mut indices);
            }
            slices.push(start..indices.len());
        }
        Self {
            degree: k,
            indices,
            slices,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Index range of the monomials of degree exactly `s`.
    pub fn slice(&self, s: usize) -> Range<usize> {
        self.slices[s].clone()
    }

    /// Position of `alpha` in the layout, if its degree does not exceed the
    /// layout degree.
    pub fn index_of(&self, alpha: &MultiIndex<D>) -> Option<usize> {
        let s: usize = alpha.iter().sum();
        if s > self.degree {
            return None;
        }
        // Offset of the slice plus the rank inside it.
        let mut pos = poly_dim_signed(s as isize - 1, D);
        let mut remaining = s;
        for (axis, &a) in alpha.iter().enumerate().take(D.saturating_sub(1)) {
            let vars_left = D - axis - 1;
            // Entries with a larger power on this axis come first.
            for larger in (a + 1)..=remaining {
                pos += homogeneous_dim(remaining - larger, vars_left);
            }
            remaining -= a;
        }
        Some(pos)
    }
}

/// Runtime-dimension variant of [`BasisLayout`], used where `d` is a value.
pub fn basis_layout(k: usize, d: usize) -> (Vec<Vec<usize>>, Vec<Range<usize>>) {
    fn convert<const D: usize>(k: usize) -> (Vec<Vec<usize>>, Vec<Range<usize>>) {
        let l = BasisLayout::<D>::new(k);
        (l.indices.iter().map(|a| a.to_vec()).collect(), l.slices)
    }
    match d {
        1 => convert::<1>(k),
        2 => convert::<2>(k),
        3 => convert::<3>(k),
        _ => panic!("basis_layout supports dimensions 1, 2 and 3, got {d}"),
    }
}

/// Value of a single scaled monomial.
pub fn monomial_eval<const D: usize>(
    alpha: &MultiIndex<D>,
    point: &[f64; D],
    center: &[f64; D],
    scale: f64,
) -> f64 {
    debug_assert!(scale > 0.0);
    (0..D)
        .map(|i| ((point[i] - center[i]) / scale).powi(alpha[i] as i32))
        .product()
}

/// Gradient of a single scaled monomial.
pub fn monomial_grad<const D: usize>(
    alpha: &MultiIndex<D>,
    point: &[f64; D],
    center: &[f64; D],
    scale: f64,
) -> [f64; D] {
    let mut g = [0.0; D];
    for (i, gi) in g.iter_mut().enumerate() {
        if alpha[i] == 0 {
            continue;
        }
        let mut lowered = *alpha;
        lowered[i] -= 1;
        *gi = alpha[i] as f64 / scale * monomial_eval(&lowered, point, center, scale);
    }
    g
}

/// Scaled monomial basis of degree `k` attached to a centre and a scale.
#[derive(Debug, Clone)]
pub struct MonomialBasis<const D: usize> {
    pub center: [f64; D],
    pub scale: f64,
    pub layout: BasisLayout<D>,
}

pub type CellBasis = MonomialBasis<3>;
pub type FaceBasis = MonomialBasis<2>;

impl<const D: usize> MonomialBasis<D> {
    pub fn new(center: [f64; D], scale: f64, k: usize) -> Self {
        assert!(scale > 0.0, "monomial scale must be positive");
        Self {
            center,
            scale,
            layout: BasisLayout::new(k),
        }
    }

    pub fn degree(&self) -> usize {
        self.layout.degree
    }

    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layout.is_empty()
    }

    fn powers(&self, point: &[f64; D]) -> [Vec<f64>; D] {
        let k = self.degree();
        std::array::from_fn(|i| {
            let t = (point[i] - self.center[i]) / self.scale;
            let mut p = Vec::with_capacity(k + 1);
            p.push(1.0);
            for j in 1..=k {
                p.push(p[j - 1] * t);
            }
            p
        })
    }

    /// Values of every basis monomial at `point`, written into `out`.
    pub fn eval_into(&self, point: &[f64; D], out: &mut [f64]) {
        let pw = self.powers(point);
        for (o, alpha) in out.iter_mut().zip(&self.layout.indices) {
            *o = (0..D).map(|i| pw[i][alpha[i]]).product();
        }
    }

    pub fn eval(&self, point: &[f64; D]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(point, &mut out);
        out
    }

    /// Gradients of every basis monomial at `point`.
    pub fn grad_into(&self, point: &[f64; D], out: &mut [[f64; D]]) {
        let pw = self.powers(point);
        for (o, alpha) in out.iter_mut().zip(&self.layout.indices) {
            for (d, od) in o.iter_mut().enumerate() {
                if alpha[d] == 0 {
                    *od = 0.0;
                    continue;
                }
                let mut v = alpha[d] as f64 / self.scale;
                for i in 0..D {
                    v *= if i == d {
                        pw[i][alpha[i] - 1]
                    } else {
                        pw[i][alpha[i]]
                    };
                }
                *od = v;
            }
        }
    }

    pub fn grad(&self, point: &[f64; D]) -> Vec<[f64; D]> {
        let mut out = vec![[0.0; D]; self.len()];
        self.grad_into(point, &mut out);
        out
    }

    /// Expansion of `Δ m_α` in the same basis as `(index, coefficient)` pairs.
    pub fn laplacian_terms(&self, idx: usize) -> Vec<(usize, f64)> {
        let alpha = self.layout.indices[idx];
        let h2 = self.scale * self.scale;
        let mut terms = Vec::new();
        for d in 0..D {
            if alpha[d] >= 2 {
                let mut lowered = alpha;
                lowered[d] -= 2;
                let j = self
                    .layout
                    .index_of(&lowered)
                    .expect("lowered index stays in the layout");
                terms.push((j, (alpha[d] * (alpha[d] - 1)) as f64 / h2));
            }
        }
        terms
    }

    /// Evaluates the polynomial with coefficients `coeffs` at `point`.
    pub fn eval_poly(&self, coeffs: &[f64], point: &[f64; D]) -> f64 {
        let pw = self.powers(point);
        coeffs
            .iter()
            .zip(&self.layout.indices)
            .map(|(c, alpha)| c * (0..D).map(|i| pw[i][alpha[i]]).product::<f64>())
            .sum()
    }

    /// Gradient of the polynomial with coefficients `coeffs` at `point`.
    pub fn grad_poly(&self, coeffs: &[f64], point: &[f64; D]) -> [f64; D] {
        let mut g = [0.0; D];
        let grads = self.grad(point);
        for (c, gm) in coeffs.iter().zip(&grads) {
            for d in 0..D {
                g[d] += c * gm[d];
            }
        }
        g
    }
}
