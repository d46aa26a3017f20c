//! Built-in metric families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MetricSpec, SignatureHint};
use crate::error::{Error, Result};
use crate::expr::{Expression, Params};
use crate::linalg;

/// Family tag carried by a metric; drives family-specific expectations in
/// the verification suite (e.g. a vanishing Cartan tensor).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    PseudoRiemannian,
    Randers,
    LorentzFinslerExample,
    Custom,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::PseudoRiemannian => "pseudo-riemannian",
            Family::Randers => "randers",
            Family::LorentzFinslerExample => "lorentz-finsler-example",
            Family::Custom => "custom",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Family> {
        Some(match tag {
            "pseudo-riemannian" => Family::PseudoRiemannian,
            "randers" => Family::Randers,
            "lorentz-finsler-example" => Family::LorentzFinslerExample,
            "custom" => Family::Custom,
            _ => return None,
        })
    }
}

/// `Σ_ij a_ij(x) y^i y^j` from row-major coefficient expressions.
fn quadratic_form(n: usize, entries: &[Expression]) -> Expression {
    let mut acc = Expression::num(0.0);
    for i in 0..n {
        for j in 0..n {
            let term = entries[i * n + j]
                .mul(&Expression::y(i, n))
                .mul(&Expression::y(j, n));
            acc = acc.add(&term);
        }
    }
    acc
}

fn check_entries_are_positional(entries: &[Expression], what: &str) -> Result<()> {
    if entries.iter().any(|e| e.depends_on_direction()) {
        return Err(Error::Invalid(format!(
            "{what} coefficients may depend on x only"
        )));
    }
    Ok(())
}

impl MetricSpec {
    /// `L = a_ij(x) y^i y^j` with user coefficient expressions (row-major,
    /// length `n²`). The domain follows the signature hint: positive
    /// definite keeps `L > 0` (excluding the zero section), Lorentz keeps
    /// the future cone `y0 > 0`, `L > 0`.
    pub fn pseudo_riemannian(
        n: usize,
        entries: &[Expression],
        params: Params,
        hint: SignatureHint,
    ) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Invalid(format!(
                "expected {} coefficient expressions, got {}",
                n * n,
                entries.len()
            )));
        }
        check_entries_are_positional(entries, "pseudo-riemannian")?;
        let l = quadratic_form(n, entries);
        let domain = match hint {
            SignatureHint::PositiveDefinite => vec![l.clone()],
            SignatureHint::Lorentz => vec![Expression::y(0, n), l.clone()],
        };
        MetricSpec::with_family(n, l, domain, params, Some(hint), Family::PseudoRiemannian)
    }

    /// Euclidean metric `L = Σ (y^i)²` on `ℝ^n`, slit at the origin.
    pub fn euclidean(n: usize) -> Result<Self> {
        let entries = identity_entries(n);
        MetricSpec::pseudo_riemannian(n, &entries, Params::new(), SignatureHint::PositiveDefinite)
    }

    /// Flat metric of signature `(+, -, …, -)` on the future cone
    /// `{y0 > 0, L > 0}`.
    pub fn minkowski(n: usize) -> Result<Self> {
        let mut entries = vec![Expression::num(0.0); n * n];
        entries[0] = Expression::num(1.0);
        for i in 1..n {
            entries[i * n + i] = Expression::num(-1.0);
        }
        MetricSpec::pseudo_riemannian(n, &entries, Params::new(), SignatureHint::Lorentz)
    }

    /// Round-sphere surface chart: `L = (y0)² + sin²(x0) (y1)²` with
    /// colatitude `x0 ∈ (0, π)`.
    pub fn sphere_surface() -> Result<Self> {
        let n = 2;
        let sin2 = Expression::x(0, n).apply(crate::expr::Func::Sin).pow_i(2);
        let entries = [
            Expression::num(1.0),
            Expression::num(0.0),
            Expression::num(0.0),
            sin2,
        ];
        let l = quadratic_form(n, &entries);
        let domain = vec![
            l.clone(),
            Expression::x(0, n).apply(crate::expr::Func::Sin),
        ];
        MetricSpec::with_family(
            n,
            l,
            domain,
            Params::new(),
            Some(SignatureHint::PositiveDefinite),
            Family::PseudoRiemannian,
        )
    }

    /// Randers metric `L = (sqrt(a_ij y^i y^j) + b_i y^i)²` with positive
    /// definite `a` and `‖b‖_a < 1`, checked numerically at sample base
    /// points.
    pub fn randers(
        n: usize,
        a_entries: &[Expression],
        b_entries: &[Expression],
        params: Params,
    ) -> Result<Self> {
        if a_entries.len() != n * n || b_entries.len() != n {
            return Err(Error::Invalid(
                "randers needs n² quadratic coefficients and n one-form coefficients".into(),
            ));
        }
        check_entries_are_positional(a_entries, "randers quadratic")?;
        check_entries_are_positional(b_entries, "randers one-form")?;
        check_randers_norm(n, a_entries, b_entries, &params)?;
        let quad = quadratic_form(n, a_entries);
        let mut beta = Expression::num(0.0);
        for (i, b) in b_entries.iter().enumerate() {
            beta = beta.add(&b.mul(&Expression::y(i, n)));
        }
        let l = quad.sqrt().add(&beta).pow_i(2);
        MetricSpec::with_family(
            n,
            l,
            vec![quad],
            params,
            Some(SignatureHint::PositiveDefinite),
            Family::Randers,
        )
    }

    /// Randers metric over the flat Euclidean quadratic form with constant
    /// one-form coefficients.
    pub fn randers_flat(n: usize, b: &[f64]) -> Result<Self> {
        let a = identity_entries(n);
        let bexpr: Vec<Expression> = b.iter().map(|v| Expression::num(*v)).collect();
        MetricSpec::randers(n, &a, &bexpr, Params::new())
    }

    /// The shipped genuinely non-quadratic Lorentz-Finsler example,
    /// `L = (y0² - Σ_{i≥1} y_i²)^(1-s) · (y0)^(2s)` on the future cone;
    /// 2-homogeneous by construction for any exponent parameter `s`.
    pub fn lorentz_finsler_example(n: usize, s: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&s) {
            return Err(Error::Invalid(
                "the Lorentz-Finsler example expects a small exponent 0 <= s < 0.5".into(),
            ));
        }
        let mut quad = Expression::y(0, n).pow_i(2);
        for i in 1..n {
            quad = quad.sub(&Expression::y(i, n).pow_i(2));
        }
        let one_minus_s = Expression::num(1.0).sub(&Expression::param("s"));
        let two_s = Expression::num(2.0).mul(&Expression::param("s"));
        let l = quad
            .pow(&one_minus_s)
            .mul(&Expression::y(0, n).pow(&two_s));
        let domain = vec![Expression::y(0, n), quad];
        let mut params = Params::new();
        params.insert("s".into(), s);
        MetricSpec::with_family(
            n,
            l,
            domain,
            params,
            Some(SignatureHint::Lorentz),
            Family::LorentzFinslerExample,
        )
    }
}

fn identity_entries(n: usize) -> Vec<Expression> {
    let mut entries = vec![Expression::num(0.0); n * n];
    for i in 0..n {
        entries[i * n + i] = Expression::num(1.0);
    }
    entries
}

/// `‖b‖²_a = a^{ij} b_i b_j < 1` at the origin and a few random base
/// points; a Randers metric loses positive definiteness beyond that.
fn check_randers_norm(
    n: usize,
    a_entries: &[Expression],
    b_entries: &[Expression],
    params: &Params,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a4d);
    let y = vec![0.0; n];
    let mut points: Vec<Vec<f64>> = vec![vec![0.0; n]];
    for _ in 0..8 {
        points.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    for x in &points {
        let mut a = vec![0.0; n * n];
        for (k, e) in a_entries.iter().enumerate() {
            a[k] = e.eval::<f64>(x, &y, params)?;
        }
        let (inv, _) = linalg::invert(&a, n).ok_or_else(|| {
            Error::Invalid("randers quadratic form is singular at a sample point".into())
        })?;
        let mut b = vec![0.0; n];
        for (k, e) in b_entries.iter().enumerate() {
            b[k] = e.eval::<f64>(x, &y, params)?;
        }
        let mut norm2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                norm2 += inv[i * n + j] * b[i] * b[j];
            }
        }
        if norm2 >= 1.0 - 1e-9 {
            return Err(Error::Invalid(format!(
                "randers one-form too large: ‖b‖²_a = {norm2:.6} ≥ 1 at x = {x:?}"
            )));
        }
    }
    Ok(())
}
